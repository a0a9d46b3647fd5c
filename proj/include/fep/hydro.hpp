#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fep/errors.hpp"
#include "fep/testfunction.hpp"

namespace fep {

struct Grid1D {
    double u_min;
    double u_max;
    int nu;  // cells (nu + 1 nodes)
    double T;
    int nt;  // steps (nt + 1 slices)

    double du() const { return (u_max - u_min) / nu; }
    double dt() const { return T / nt; }
    double u(int iu) const { return u_min + iu * du(); }
    double t(int it) const { return it * dt(); }
};

/// Density-fluctuation profile alpha(t, u) on a uniform grid.
struct MacroscopicPath {
    Grid1D grid;
    std::vector<double> values;  // (nt+1) x (nu+1), row-major in time

    double at(int it, int iu) const {
        return values[static_cast<std::size_t>(it) * (grid.nu + 1) + static_cast<std::size_t>(iu)];
    }
    double& at(int it, int iu) {
        return values[static_cast<std::size_t>(it) * (grid.nu + 1) + static_cast<std::size_t>(iu)];
    }
    /// Riemann pairing int alpha(t_i, u) G(u) du at time slice it.
    double pair(int it, const TestFunction& G) const;
};

/// Transport/diffusion coefficients from closed forms, cross-checked against
/// the enumeration oracles at construction; mismatch beyond 1e-10 throws.
struct Coefficients {
    double rho;
    double A;        // (1-rho)(2rho-1)/rho
    double A_prime;  // 1/rho^2 - 2
    double B;        // (2rho-1) rho (1-rho)
    double h_prime;  // 1/rho^2
    static Coefficients make(double rho);
};

/// Crank-Nicolson solution of d_t alpha = h'(rho) Lap alpha - 2A(rho) Lap H
/// with vanishing far-field (Dirichlet) boundary. phi = initial profile,
/// H = forcing; either may be absent (treated as zero).
MacroscopicPath solve_heat_forced(const std::optional<TestFunction>& phi,
                                  const std::optional<TestFunction>& H, double rho,
                                  const Grid1D& grid);

/// Exact-translation solution of d_t alpha = -A'(rho) grad alpha.
MacroscopicPath solve_transport(const TestFunction& phi, double rho, const Grid1D& grid);

/// Linear functional of the symmetric (heat) operator:
/// mu_T(H_T) - mu_0(H_0) - int mu_s((d_s + h'(rho) Lap) H_s) ds,
/// trapezoid in t, closed-form-weighted Riemann in u.
double ell_T(const MacroscopicPath& mu, const TestFunction& H, double rho);

/// Same with the transport operator (d_s + A'(rho) grad).
double ell_transport(const MacroscopicPath& mu, const TestFunction& H, double rho);

/// Finite variational test set with its Gram matrix
/// [H, G] = A(rho) int_0^T int grad H grad G du dt.
struct RateBasis {
    std::vector<TestFunction> funcs;
    Eigen::MatrixXd gram;
    static RateBasis make(std::vector<TestFunction> funcs, double rho, double T);
    static Eigen::MatrixXd gram_serial(const std::vector<TestFunction>& funcs, double rho, double T);
};

struct QuadraticRateResult {
    double value = 0.0;
    std::vector<double> maximizer;  // coefficients in the basis
    bool singular_gram = false;     // pseudo-inverse fallback engaged
};

/// sup over the basis span of { ell_T(mu, H) - [H, H] } = b^T M^{-1} b / 4.
QuadraticRateResult q_dyn_sym(const MacroscopicPath& mu, const RateBasis& basis, double rho);

/// sup over the span of { mu_0(phi) - B(rho) ||phi||^2 / 2 } = b^T M_B^{-1} b / 2,
/// with the B(rho)-weighted Gram of space-only basis functions.
QuadraticRateResult q_ini(const MacroscopicPath& mu, const std::vector<TestFunction>& space_basis,
                          double rho);

struct AsymRateCheck {
    bool is_zero = false;  // otherwise the supremum is unbounded
    double max_rel_residual = 0.0;
};

/// Supremum of the purely linear transport functional: zero when the path is
/// a weak transport solution on the basis (Richardson-extrapolated quadrature
/// at the pinned rule), infinite-flag otherwise.
AsymRateCheck q_dyn_asym_check(const MacroscopicPath& mu, const RateBasis& basis, double rho,
                               double rel_tol = 1e-8);

}  // namespace fep
