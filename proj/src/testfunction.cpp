#include "fep/testfunction.hpp"

#include <cmath>

#include "fep/stats.hpp"

namespace fep {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kGaussianCut = 8.0;  // truncation radius in sigmas; tail < 2e-14
}  // namespace

TestFunction::TestFunction(Profile p, double amplitude, double center, double width)
    : profile_(p), amplitude_(amplitude), center_(center), width_(width) {
    if (width <= 0.0) throw Error("test function width must be positive");
    compute_norms();
}

TestFunction TestFunction::gaussian(double amplitude, double center, double sigma) {
    return TestFunction(Profile::gaussian, amplitude, center, sigma);
}
TestFunction TestFunction::bump(double amplitude, double center, double radius) {
    return TestFunction(Profile::bump, amplitude, center, radius);
}
TestFunction TestFunction::sine_bump(double amplitude, double center, double radius) {
    return TestFunction(Profile::sine_bump, amplitude, center, radius);
}

TestFunction TestFunction::with_time_mod(TimeMod kind, double a, double b) const {
    TestFunction out = *this;
    out.mod_ = kind;
    out.mod_a_ = a;
    out.mod_b_ = b;
    return out;
}

TestFunction TestFunction::normalized_l2() const {
    TestFunction out = *this;
    double scale = 1.0 / std::sqrt(l2_sq_);
    out.amplitude_ *= scale;
    out.l2_sq_ = 1.0;
    out.grad_l2_sq_ = grad_l2_sq_ * scale * scale;
    return out;
}

TestFunction TestFunction::translated(double shift) const {
    TestFunction out = *this;
    out.center_ += shift;
    return out;
}

TestFunction TestFunction::scaled(double factor) const {
    TestFunction out = *this;
    out.amplitude_ *= factor;
    out.l2_sq_ *= factor * factor;
    out.grad_l2_sq_ *= factor * factor;
    return out;
}

double TestFunction::support_radius() const {
    return profile_ == Profile::gaussian ? kGaussianCut * width_ : width_;
}

double TestFunction::value(double u) const {
    double z = (u - center_) / width_;
    switch (profile_) {
        case Profile::gaussian:
            if (std::abs(z) >= kGaussianCut) return 0.0;
            return amplitude_ * std::exp(-0.5 * z * z);
        case Profile::bump: {
            double q = 1.0 - z * z;
            if (q < 1e-12) return 0.0;
            return amplitude_ * std::exp(-1.0 / q);
        }
        case Profile::sine_bump: {
            if (std::abs(z) >= 1.0) return 0.0;
            double c = std::cos(0.5 * kPi * z);
            return amplitude_ * c * c;
        }
    }
    return 0.0;
}

double TestFunction::d1(double u) const {
    double z = (u - center_) / width_;
    switch (profile_) {
        case Profile::gaussian:
            if (std::abs(z) >= kGaussianCut) return 0.0;
            return amplitude_ * std::exp(-0.5 * z * z) * (-z) / width_;
        case Profile::bump: {
            double q = 1.0 - z * z;
            if (q < 1e-12) return 0.0;
            double g1 = -2.0 * z / (q * q);
            return amplitude_ * std::exp(-1.0 / q) * g1 / width_;
        }
        case Profile::sine_bump: {
            if (std::abs(z) >= 1.0) return 0.0;
            return -amplitude_ * (0.5 * kPi / width_) * std::sin(kPi * z);
        }
    }
    return 0.0;
}

double TestFunction::d2(double u) const {
    double z = (u - center_) / width_;
    double w2 = width_ * width_;
    switch (profile_) {
        case Profile::gaussian:
            if (std::abs(z) >= kGaussianCut) return 0.0;
            return amplitude_ * std::exp(-0.5 * z * z) * (z * z - 1.0) / w2;
        case Profile::bump: {
            double q = 1.0 - z * z;
            if (q < 1e-12) return 0.0;
            double g1 = -2.0 * z / (q * q);
            double g2 = -2.0 * (1.0 + 3.0 * z * z) / (q * q * q);
            return amplitude_ * std::exp(-1.0 / q) * (g1 * g1 + g2) / w2;
        }
        case Profile::sine_bump: {
            if (std::abs(z) >= 1.0) return 0.0;
            return -amplitude_ * (0.5 * kPi * kPi / w2) * std::cos(kPi * z);
        }
    }
    return 0.0;
}

double TestFunction::psi(double t) const {
    switch (mod_) {
        case TimeMod::constant: return 1.0;
        case TimeMod::poly: return 1.0 + mod_a_ * t + mod_b_ * t * t;
        case TimeMod::cosine: return std::cos(mod_a_ * t);
    }
    return 1.0;
}

double TestFunction::dpsi(double t) const {
    switch (mod_) {
        case TimeMod::constant: return 0.0;
        case TimeMod::poly: return mod_a_ + 2.0 * mod_b_ * t;
        case TimeMod::cosine: return -mod_a_ * std::sin(mod_a_ * t);
    }
    return 0.0;
}

double TestFunction::psi_max_abs(double t0, double t1) const {
    switch (mod_) {
        case TimeMod::constant:
            return 1.0;
        case TimeMod::poly: {
            double m = std::max(std::abs(psi(t0)), std::abs(psi(t1)));
            if (mod_b_ != 0.0) {
                double tc = -mod_a_ / (2.0 * mod_b_);
                if (tc > t0 && tc < t1) m = std::max(m, std::abs(psi(tc)));
            }
            return m;
        }
        case TimeMod::cosine: {
            if (mod_a_ == 0.0) return 1.0;
            double a = mod_a_ * t0, b = mod_a_ * t1;
            if (a > b) std::swap(a, b);
            // |cos| attains 1 at multiples of pi
            if (std::floor(b / kPi) >= std::ceil(a / kPi)) return 1.0;
            return std::max(std::abs(std::cos(a)), std::abs(std::cos(b)));
        }
    }
    return 1.0;
}

double TestFunction::sup_abs() const {
    switch (profile_) {
        case Profile::gaussian: return std::abs(amplitude_);
        case Profile::bump: return std::abs(amplitude_) * std::exp(-1.0);
        case Profile::sine_bump: return std::abs(amplitude_);
    }
    return std::abs(amplitude_);
}

void TestFunction::compute_norms() {
    double r = support_radius();
    double a = center_ - r, b = center_ + r;
    l2_sq_ = integrate([this](double u) { double v = value(u); return v * v; }, a, b, 256);
    grad_l2_sq_ = integrate([this](double u) { double v = d1(u); return v * v; }, a, b, 256);
}

std::string TestFunction::describe() const {
    const char* p = profile_ == Profile::gaussian ? "gaussian"
                    : profile_ == Profile::bump   ? "bump"
                                                  : "sine_bump";
    return std::string(p) + "(amp=" + std::to_string(amplitude_) + ", center=" + std::to_string(center_) +
           ", width=" + std::to_string(width_) + ")";
}

}  // namespace fep
