#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace fep {

// Composite 16-point Gauss-Legendre quadrature of f over [a, b] with
// `panels` equal subintervals.
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 64);

// 4-point Gauss-Legendre on a single interval.
double integrate_gl4(const std::function<double(double)>& f, double a, double b);

// Regularized lower incomplete gamma P(s, x).
double reg_gamma_p(double s, double x);

// Upper tail of the chi-square distribution with k degrees of freedom.
double chi_square_tail(double statistic, int dof);

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double std_error = 0.0; // of the mean
};

Summary summarize(std::span<const double> xs);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace fep
