#include "fep/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fep {

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; symmetric).
constexpr double kGl16Nodes[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499,
};
constexpr double kGl16Weights[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541,
};

constexpr double kGl4Nodes[2] = {0.3399810435848563, 0.8611363115940526};
constexpr double kGl4Weights[2] = {0.6521451548625461, 0.3478548451374538};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, int panels) {
    double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        double mid = a + (p + 0.5) * h;
        double half = 0.5 * h;
        double s = 0.0;
        for (int i = 0; i < 8; ++i)
            s += kGl16Weights[i] * (f(mid + half * kGl16Nodes[i]) + f(mid - half * kGl16Nodes[i]));
        total += s * half;
    }
    return total;
}

double integrate_gl4(const std::function<double(double)>& f, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
        s += kGl4Weights[i] * (f(mid + half * kGl4Nodes[i]) + f(mid - half * kGl4Nodes[i]));
    return s * half;
}

namespace {

double gamma_p_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (s + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

double gamma_q_contfrac(double s, double x) {
    // Lentz's algorithm for the continued fraction of Q(s, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace

double reg_gamma_p(double s, double x) {
    if (x < 0.0 || s <= 0.0) throw std::invalid_argument("reg_gamma_p domain");
    if (x == 0.0) return 0.0;
    if (x < s + 1.0) return gamma_p_series(s, x);
    return 1.0 - gamma_q_contfrac(s, x);
}

double chi_square_tail(double statistic, int dof) {
    if (statistic <= 0.0) return 1.0;
    if (statistic < 0.5 * dof + 1.0) return 1.0 - gamma_p_series(0.5 * dof, 0.5 * statistic);
    return gamma_q_contfrac(0.5 * dof, 0.5 * statistic);
}

Summary summarize(std::span<const double> xs) {
    Summary s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.variance = ss / static_cast<double>(s.n - 1);
        s.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
    }
    return s;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("correlation input");
    Summary sx = summarize(xs), sy = summarize(ys);
    double cov = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) cov += (xs[i] - sx.mean) * (ys[i] - sy.mean);
    cov /= static_cast<double>(xs.size() - 1);
    return cov / std::sqrt(sx.variance * sy.variance);
}

}  // namespace fep
