#pragma once

#include <cstdint>
#include <string>

#include "fep/errors.hpp"

namespace fep {

/// Smooth rapidly decaying test profile with exact pointwise and derivative
/// evaluation. Closed-form objects, never grids: the discrete gradient and
/// Laplacian below are exact to machine precision.
///
/// Profiles:
///   gaussian  amp * exp(-(u-c)^2 / (2 sigma^2)), truncated at 8 sigma
///   bump      amp * exp(-1 / (1 - z^2)), z = (u-c)/R, compactly supported
///   sine_bump amp * cos^2(pi z / 2) on |z| <= 1 (C^1 at the edge)
///
/// Optional time dependence H(t, u) = psi(t) H0(u) with psi one of
///   constant  1
///   poly      1 + a t + b t^2
///   cosine    cos(a t)
class TestFunction {
  public:
    enum class Profile { gaussian, bump, sine_bump };
    enum class TimeMod { constant, poly, cosine };

    static TestFunction gaussian(double amplitude, double center, double sigma);
    static TestFunction bump(double amplitude, double center, double radius);
    static TestFunction sine_bump(double amplitude, double center, double radius);

    TestFunction with_time_mod(TimeMod kind, double a, double b = 0.0) const;
    /// Copy with amplitude rescaled so that the spatial L2 norm is 1.
    TestFunction normalized_l2() const;
    /// Copy translated by `shift` (center moves right by shift).
    TestFunction translated(double shift) const;
    TestFunction scaled(double factor) const;

    // spatial profile H0 and closed-form derivatives
    double value(double u) const;
    double d1(double u) const;
    double d2(double u) const;

    // time modulation
    double psi(double t) const;
    double dpsi(double t) const;
    /// max over s in [t0, t1] of |psi(s)| (exact; used for rate envelopes)
    double psi_max_abs(double t0, double t1) const;
    bool time_dependent() const { return mod_ != TimeMod::constant; }

    // full evaluation
    double operator()(double t, double u) const { return psi(t) * value(u); }
    double dt(double t, double u) const { return dpsi(t) * value(u); }

    // discrete operators at u = x/N
    double grad_N(double u, std::int64_t N) const {
        double n = static_cast<double>(N);
        return n * (value(u + 1.0 / n) - value(u));
    }
    double lap_N(double u, std::int64_t N) const {
        double n = static_cast<double>(N);
        return n * n * (value(u + 1.0 / n) + value(u - 1.0 / n) - 2.0 * value(u));
    }

    double center() const { return center_; }
    double amplitude() const { return amplitude_; }
    /// Support radius around the center (8 sigma for the gaussian profile).
    double support_radius() const;
    double sup_abs() const;

    // spatial L2 quantities (quadrature, accurate to ~1e-14)
    double l2_sq() const { return l2_sq_; }
    double grad_l2_sq() const { return grad_l2_sq_; }

    Profile profile() const { return profile_; }
    std::string describe() const;

  private:
    TestFunction(Profile p, double amplitude, double center, double width);
    void compute_norms();

    Profile profile_;
    double amplitude_;
    double center_;
    double width_;  // sigma or support radius
    TimeMod mod_ = TimeMod::constant;
    double mod_a_ = 0.0, mod_b_ = 0.0;
    double l2_sq_ = 0.0, grad_l2_sq_ = 0.0;
};

}  // namespace fep
