#include "fep/hydro.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "fep/measures.hpp"
#include "fep/stats.hpp"

namespace fep {

double MacroscopicPath::pair(int it, const TestFunction& G) const {
    double t = grid.t(it);
    double acc = 0.0;
    for (int iu = 0; iu <= grid.nu; ++iu) acc += at(it, iu) * G(t, grid.u(iu));
    return acc * grid.du();
}

Coefficients Coefficients::make(double rho) {
    Coefficients c;
    c.rho = rho;
    c.A = coeff_A(rho);
    c.A_prime = coeff_A_prime(rho);
    c.B = coeff_B(rho);
    c.h_prime = coeff_h_tilde_prime(rho);
    // single source of truth: closed forms must agree with the enumeration
    double a_enum = exact_local_expectation(LocalFunction::bond_activity(), rho) / 2.0;
    double ap_enum = exact_local_expectation_drho(LocalFunction::bond_activity(), rho) / 2.0;
    double b_enum = zeta_moments(rho).second;
    double hp_enum = exact_local_expectation_drho(LocalFunction::gradient_h(), rho);
    double h_enum = exact_local_expectation(LocalFunction::gradient_h(), rho);
    if (std::abs(a_enum - c.A) > 1e-10 || std::abs(ap_enum - c.A_prime) > 1e-10 ||
        std::abs(b_enum - c.B) > 1e-10 || std::abs(hp_enum - c.h_prime) > 1e-10 ||
        std::abs(h_enum - coeff_h_tilde(rho)) > 1e-10)
        throw Error("closed-form coefficients disagree with enumeration oracle");
    return c;
}

namespace {

void check_far_field(const std::optional<TestFunction>& phi, const std::optional<TestFunction>& H,
                     double diffusivity, const Grid1D& grid) {
    if (grid.nu < 2 || grid.nt < 1 || grid.u_max <= grid.u_min || grid.T <= 0.0)
        throw UnstableGrid("degenerate grid");
    double margin = 4.0 * std::sqrt(diffusivity * grid.T);
    double lo = grid.u_min, hi = grid.u_max;
    for (const auto& f : {phi, H}) {
        if (!f) continue;
        if (f->center() + f->support_radius() + margin > hi ||
            f->center() - f->support_radius() - margin < lo)
            throw UnstableGrid("domain too small for the far-field boundary rule");
    }
}

}  // namespace

MacroscopicPath solve_heat_forced(const std::optional<TestFunction>& phi,
                                  const std::optional<TestFunction>& H, double rho,
                                  const Grid1D& grid) {
    Coefficients coef = Coefficients::make(rho);
    double D = coef.h_prime;
    check_far_field(phi, H, D, grid);

    MacroscopicPath path;
    path.grid = grid;
    path.values.assign(static_cast<std::size_t>(grid.nt + 1) * (grid.nu + 1), 0.0);
    for (int iu = 0; iu <= grid.nu; ++iu)
        path.at(0, iu) = phi ? phi->value(grid.u(iu)) : 0.0;
    path.at(0, 0) = 0.0;
    path.at(0, grid.nu) = 0.0;

    int m = grid.nu - 1;  // interior unknowns
    double beta = D * grid.dt() / (2.0 * grid.du() * grid.du());
    // constant tridiagonal system (-beta, 1 + 2 beta, -beta): factor once
    std::vector<double> cp(static_cast<std::size_t>(m), 0.0);
    double b0 = 1.0 + 2.0 * beta;
    cp[0] = -beta / b0;
    for (int i = 1; i < m; ++i) cp[static_cast<std::size_t>(i)] = -beta / (b0 + beta * cp[static_cast<std::size_t>(i - 1)]);

    std::vector<double> rhs(static_cast<std::size_t>(m)), dp(static_cast<std::size_t>(m));
    for (int n = 0; n < grid.nt; ++n) {
        double t_mid = (n + 0.5) * grid.dt();
        for (int j = 1; j <= m; ++j) {
            double lap = path.at(n, j - 1) - 2.0 * path.at(n, j) + path.at(n, j + 1);
            double force = H ? -2.0 * coef.A * H->psi(t_mid) * H->d2(grid.u(j)) : 0.0;
            rhs[static_cast<std::size_t>(j - 1)] = path.at(n, j) + beta * lap + grid.dt() * force;
        }
        dp[0] = rhs[0] / b0;
        for (int i = 1; i < m; ++i)
            dp[static_cast<std::size_t>(i)] = (rhs[static_cast<std::size_t>(i)] + beta * dp[static_cast<std::size_t>(i - 1)]) /
                                              (b0 + beta * cp[static_cast<std::size_t>(i - 1)]);
        path.at(n + 1, m) = dp[static_cast<std::size_t>(m - 1)];
        for (int i = m - 2; i >= 0; --i) {
            dp[static_cast<std::size_t>(i)] -= cp[static_cast<std::size_t>(i)] * dp[static_cast<std::size_t>(i + 1)];
            path.at(n + 1, i + 1) = dp[static_cast<std::size_t>(i)];
        }
        path.at(n + 1, 0) = 0.0;
        path.at(n + 1, grid.nu) = 0.0;
    }
    return path;
}

MacroscopicPath solve_transport(const TestFunction& phi, double rho, const Grid1D& grid) {
    Coefficients coef = Coefficients::make(rho);
    MacroscopicPath path;
    path.grid = grid;
    path.values.assign(static_cast<std::size_t>(grid.nt + 1) * (grid.nu + 1), 0.0);
    for (int it = 0; it <= grid.nt; ++it) {
        double shift = coef.A_prime * grid.t(it);
        for (int iu = 0; iu <= grid.nu; ++iu) path.at(it, iu) = phi.value(grid.u(iu) - shift);
    }
    return path;
}

namespace {

// operator pairing with optional strides (same pinned rule on coarser grids)
double ell_strided(const MacroscopicPath& mu, const TestFunction& H, double coeff, bool transport,
                   int st, int su, double* scale_out) {
    const Grid1D& g = mu.grid;
    double du_eff = g.du() * su;
    auto pair_op = [&](int it) {
        double t = g.t(it);
        double psi = H.psi(t), dpsi = H.dpsi(t);
        double acc = 0.0;
        for (int iu = 0; iu <= g.nu; iu += su) {
            double u = g.u(iu);
            double op = dpsi * H.value(u) + coeff * psi * (transport ? H.d1(u) : H.d2(u));
            acc += mu.at(it, iu) * op;
        }
        return acc * du_eff;
    };
    auto pair_h = [&](int it) {
        double t = g.t(it);
        double acc = 0.0;
        for (int iu = 0; iu <= g.nu; iu += su) acc += mu.at(it, iu) * H(t, g.u(iu));
        return acc * du_eff;
    };
    double dt_eff = g.dt() * st;
    double integral = 0.0, abs_integral = 0.0;
    for (int it = 0; it <= g.nt; it += st) {
        double w = (it == 0 || it == g.nt) ? 0.5 : 1.0;
        double q = pair_op(it);
        integral += w * q * dt_eff;
        abs_integral += w * std::abs(q) * dt_eff;
    }
    double head = pair_h(g.nt), tail = pair_h(0);
    if (scale_out) *scale_out = std::abs(head) + std::abs(tail) + abs_integral;
    return head - tail - integral;
}

}  // namespace

double ell_T(const MacroscopicPath& mu, const TestFunction& H, double rho) {
    return ell_strided(mu, H, coeff_h_tilde_prime(rho), false, 1, 1, nullptr);
}

double ell_transport(const MacroscopicPath& mu, const TestFunction& H, double rho) {
    return ell_strided(mu, H, coeff_A_prime(rho), true, 1, 1, nullptr);
}

Eigen::MatrixXd RateBasis::gram_serial(const std::vector<TestFunction>& funcs, double rho, double T) {
    int n = static_cast<int>(funcs.size());
    double A = coeff_A(rho);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const TestFunction &f = funcs[static_cast<std::size_t>(i)], &g = funcs[static_cast<std::size_t>(j)];
            double tpart = integrate([&](double t) { return f.psi(t) * g.psi(t); }, 0.0, T, 32);
            double lo = std::min(f.center() - f.support_radius(), g.center() - g.support_radius());
            double hi = std::max(f.center() + f.support_radius(), g.center() + g.support_radius());
            double upart = integrate([&](double u) { return f.d1(u) * g.d1(u); }, lo, hi, 128);
            M(i, j) = M(j, i) = A * tpart * upart;
        }
    }
    return M;
}

RateBasis RateBasis::make(std::vector<TestFunction> funcs, double rho, double T) {
    RateBasis basis;
    basis.funcs = std::move(funcs);
    int n = static_cast<int>(basis.funcs.size());
    double A = coeff_A(rho);
    basis.gram = Eigen::MatrixXd::Zero(n, n);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) pairs.emplace_back(i, j);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto [i, j] = pairs[p];
        const TestFunction &f = basis.funcs[static_cast<std::size_t>(i)], &g = basis.funcs[static_cast<std::size_t>(j)];
        double tpart = integrate([&](double t) { return f.psi(t) * g.psi(t); }, 0.0, T, 32);
        double lo = std::min(f.center() - f.support_radius(), g.center() - g.support_radius());
        double hi = std::max(f.center() + f.support_radius(), g.center() + g.support_radius());
        double upart = integrate([&](double u) { return f.d1(u) * g.d1(u); }, lo, hi, 128);
        basis.gram(i, j) = basis.gram(j, i) = A * tpart * upart;
    }
    return basis;
}

namespace {

QuadraticRateResult solve_quadratic(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, double half) {
    // sup_c { b.c - c.M.c / (2 half) } with half = 1/2 for q_dyn, 1 for q_ini
    QuadraticRateResult res;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
    res.singular_gram = cod.rank() < M.rows();
    Eigen::VectorXd c;
    if (res.singular_gram) {
        c = cod.pseudoInverse() * b * half;
    } else {
        c = M.ldlt().solve(b) * half;
    }
    res.value = b.dot(c) - c.dot(M * c) / (2.0 * half);
    res.maximizer.assign(c.data(), c.data() + c.size());
    return res;
}

}  // namespace

QuadraticRateResult q_dyn_sym(const MacroscopicPath& mu, const RateBasis& basis, double rho) {
    int n = static_cast<int>(basis.funcs.size());
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = ell_T(mu, basis.funcs[static_cast<std::size_t>(i)], rho);
    // sup { b.c - c.M.c } = b M^{-1} b / 4 at c* = M^{-1} b / 2
    return solve_quadratic(basis.gram, b, 0.5);
}

QuadraticRateResult q_ini(const MacroscopicPath& mu, const std::vector<TestFunction>& space_basis,
                          double rho) {
    int n = static_cast<int>(space_basis.size());
    double B = coeff_B(rho);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const TestFunction &f = space_basis[static_cast<std::size_t>(i)], &g = space_basis[static_cast<std::size_t>(j)];
            double lo = std::min(f.center() - f.support_radius(), g.center() - g.support_radius());
            double hi = std::max(f.center() + f.support_radius(), g.center() + g.support_radius());
            M(i, j) = M(j, i) = B * integrate([&](double u) { return f.value(u) * g.value(u); }, lo, hi, 128);
        }
    }
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = mu.pair(0, space_basis[static_cast<std::size_t>(i)]);
    // sup { b.c - c.M.c / 2 } = b M^{-1} b / 2 at c* = M^{-1} b
    return solve_quadratic(M, b, 1.0);
}

AsymRateCheck q_dyn_asym_check(const MacroscopicPath& mu, const RateBasis& basis, double rho,
                               double rel_tol) {
    if (mu.grid.nt % 2 != 0 || mu.grid.nu % 2 != 0)
        throw Error("asym check needs even grid counts for Richardson extrapolation");
    double coeff = coeff_A_prime(rho);
    AsymRateCheck out;
    out.is_zero = true;
    for (const auto& H : basis.funcs) {
        double scale = 0.0;
        double fine = ell_strided(mu, H, coeff, true, 1, 1, &scale);
        double coarse = ell_strided(mu, H, coeff, true, 2, 2, nullptr);
        double extrap = (4.0 * fine - coarse) / 3.0;
        double rel = std::abs(extrap) / std::max(scale, 1e-300);
        out.max_rel_residual = std::max(out.max_rel_residual, rel);
        if (rel > rel_tol) out.is_zero = false;
    }
    return out;
}

}  // namespace fep
