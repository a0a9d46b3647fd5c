#include <doctest.h>

#include <cmath>

#include "fep/hydro.hpp"
#include "fep/measures.hpp"
#include "fep/stats.hpp"

using namespace fep;

TEST_CASE("coefficients agree with the enumeration oracle") {
    for (double rho : {0.55, 0.6, 0.75, 0.9, 0.95}) CHECK_NOTHROW(Coefficients::make(rho));
    Coefficients c = Coefficients::make(0.75);
    CHECK(c.A == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(c.A_prime == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
    CHECK(c.B == doctest::Approx(3.0 / 32.0).epsilon(1e-14));
    CHECK(c.h_prime == doctest::Approx(16.0 / 9.0).epsilon(1e-14));

    // transport speed cross-check by finite differences of the bond activity
    double h = 1e-6;
    double fd = (exact_local_expectation(LocalFunction::bond_activity(), 0.75 + h) -
                 exact_local_expectation(LocalFunction::bond_activity(), 0.75 - h)) /
                (4.0 * h);
    CHECK(fd == doctest::Approx(-2.0 / 9.0).epsilon(1e-7));
}

TEST_CASE("zero data gives the zero solution") {
    Grid1D grid{-4.0, 4.0, 256, 0.5, 128};
    MacroscopicPath p = solve_heat_forced(std::nullopt, std::nullopt, 0.75, grid);
    for (double v : p.values) CHECK(v == 0.0);
}

TEST_CASE("unforced heat flow matches the closed-form gaussian evolution") {
    double rho = 0.75;
    double D = coeff_h_tilde_prime(rho);
    double sigma0 = 0.4, amp = 1.0, T = 0.25;
    TestFunction phi = TestFunction::gaussian(amp, 0.0, sigma0);
    Grid1D grid{-8.0, 8.0, 2048, T, 512};
    MacroscopicPath p = solve_heat_forced(phi, std::nullopt, rho, grid);

    double worst = 0.0;
    for (int it : {128, 256, 512}) {
        double t = grid.t(it);
        double s2 = sigma0 * sigma0 + 2.0 * D * t;
        for (int iu = 0; iu <= grid.nu; ++iu) {
            double u = grid.u(iu);
            double exact = amp * sigma0 / std::sqrt(s2) * std::exp(-0.5 * u * u / s2);
            worst = std::max(worst, std::abs(p.at(it, iu) - exact));
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("long-time profile under constant forcing reaches the elliptic balance") {
    // the flow conserves zero total mass, so alpha approaches (2A/D) H only up
    // to a flat spreading background; the differential balance
    // D Lap alpha = 2A Lap H is the long-time statement that survives
    double rho = 0.75;
    double D = coeff_h_tilde_prime(rho);
    TestFunction H = TestFunction::bump(1.0, 0.0, 0.8);
    Grid1D grid{-8.5, 8.5, 2048, 1.5, 1024};
    MacroscopicPath p = solve_heat_forced(std::nullopt, H, rho, grid);
    double du = grid.du();
    double num = 0.0, den = 0.0;
    for (int iu = 1; iu < grid.nu; ++iu) {
        double u = grid.u(iu);
        if (std::abs(u) > 1.2 * 0.8) continue;
        double lap = (p.at(grid.nt, iu - 1) - 2.0 * p.at(grid.nt, iu) + p.at(grid.nt, iu + 1)) / (du * du);
        double target = 2.0 * coeff_A(rho) * H.d2(u);
        num += (D * lap - target) * (D * lap - target);
        den += target * target;
    }
    CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("far-field rule is enforced") {
    TestFunction phi = TestFunction::gaussian(1.0, 0.0, 1.0);
    Grid1D tight{-4.0, 4.0, 256, 1.0, 128};
    CHECK_THROWS_AS(solve_heat_forced(phi, std::nullopt, 0.75, tight), UnstableGrid);
}

TEST_CASE("transport solution translates the profile exactly") {
    double rho = 0.75;
    TestFunction phi = TestFunction::bump(1.0, 0.0, 1.0);
    Grid1D grid{-4.0, 4.0, 1024, 0.9, 256};
    MacroscopicPath p = solve_transport(phi, rho, grid);
    double speed = coeff_A_prime(rho);
    CHECK(speed == doctest::Approx(-2.0 / 9.0));

    for (int iu = 0; iu <= grid.nu; ++iu)
        CHECK(p.at(0, iu) == doctest::Approx(phi.value(grid.u(iu))).epsilon(1e-15));
    for (int it : {64, 128, 256}) {
        double t = grid.t(it);
        for (int iu = 0; iu <= grid.nu; iu += 7)
            CHECK(p.at(it, iu) == doctest::Approx(phi.value(grid.u(iu) - speed * t)).epsilon(1e-13));
        // L2 norm is conserved by translation
        double n0 = 0.0, nt = 0.0;
        for (int iu = 0; iu <= grid.nu; ++iu) {
            n0 += p.at(0, iu) * p.at(0, iu);
            nt += p.at(it, iu) * p.at(it, iu);
        }
        CHECK(nt == doctest::Approx(n0).epsilon(1e-3));
    }
}

TEST_CASE("weak identity: ell_T of a forced heat path pairs the forcing gradients") {
    double rho = 0.72;
    double T = 0.5;
    TestFunction h0 = TestFunction::bump(1.0, 0.0, 0.9);
    TestFunction probe = TestFunction::bump(0.8, 0.3, 1.1);
    Grid1D grid{-7.0, 7.0, 2048, T, 1024};
    MacroscopicPath mu = solve_heat_forced(std::nullopt, h0, rho, grid);

    for (const TestFunction& H : {h0, probe}) {
        double got = ell_T(mu, H, rho);
        double expected = 2.0 * coeff_A(rho) * T *
                          integrate([&](double u) { return h0.d1(u) * H.d1(u); }, -2.5, 2.5, 128);
        CHECK(got == doctest::Approx(expected).epsilon(0.01));
    }

    // a zero path annihilates the functional
    MacroscopicPath zero = solve_heat_forced(std::nullopt, std::nullopt, rho, grid);
    CHECK(ell_T(zero, h0, rho) == 0.0);
}

TEST_CASE("gram matrix: parallel assembly equals the serial reference") {
    std::vector<TestFunction> funcs;
    for (double c : {-0.5, 0.0, 0.5}) {
        funcs.push_back(TestFunction::bump(1.0, c, 0.8));
        funcs.push_back(TestFunction::bump(1.0, c, 0.8).with_time_mod(TestFunction::TimeMod::poly, 2.0));
    }
    RateBasis basis = RateBasis::make(funcs, 0.75, 0.4);
    Eigen::MatrixXd serial = RateBasis::gram_serial(funcs, 0.75, 0.4);
    CHECK((basis.gram - serial).cwiseAbs().maxCoeff() < 1e-12);
    // symmetric positive semidefinite
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(basis.gram);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("q_dyn_sym recovers the forcing and its energy") {
    double rho = 0.75;
    double T = 0.5;
    std::vector<TestFunction> funcs;
    for (double c : {-0.8, 0.0, 0.8}) {
        funcs.push_back(TestFunction::bump(1.0, c, 0.9));
        funcs.push_back(TestFunction::bump(1.0, c, 0.9).with_time_mod(TestFunction::TimeMod::poly, 1.5));
    }
    RateBasis basis = RateBasis::make(funcs, rho, T);
    Grid1D grid{-8.0, 8.0, 2048, T, 1024};
    MacroscopicPath mu = solve_heat_forced(std::nullopt, basis.funcs[0], rho, grid);

    QuadraticRateResult qd = q_dyn_sym(mu, basis, rho);
    double target = basis.gram(0, 0);
    CHECK(std::abs(qd.value - target) / target < 0.02);
    CHECK_FALSE(qd.singular_gram);

    // Riesz consistency: the maximizer is the forcing itself, in [.,.]-norm
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(qd.maximizer.data(),
                                                          static_cast<int>(qd.maximizer.size()));
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(c.size());
    e0(0) = 1.0;
    double dist = (c - e0).transpose() * basis.gram * (c - e0);
    CHECK(dist / target < 0.01);

    // zero path gives zero rate; scaling the path scales the rate by 4
    MacroscopicPath zero = solve_heat_forced(std::nullopt, std::nullopt, rho, grid);
    CHECK(q_dyn_sym(zero, basis, rho).value == doctest::Approx(0.0));
    MacroscopicPath doubled = mu;
    for (auto& v : doubled.values) v *= 2.0;
    CHECK(q_dyn_sym(doubled, basis, rho).value == doctest::Approx(4.0 * qd.value).epsilon(1e-10));
}

TEST_CASE("basis refinement never decreases the rate value") {
    double rho = 0.75, T = 0.5;
    std::vector<TestFunction> small_set = {TestFunction::bump(1.0, 0.4, 0.9)};
    std::vector<TestFunction> big_set = {TestFunction::bump(1.0, 0.4, 0.9),
                                         TestFunction::bump(1.0, -0.4, 0.9),
                                         TestFunction::bump(1.0, 0.0, 1.2)};
    Grid1D grid{-8.0, 8.0, 1024, T, 512};
    MacroscopicPath mu = solve_heat_forced(std::nullopt, TestFunction::bump(1.0, 0.0, 0.9), rho, grid);
    double v_small = q_dyn_sym(mu, RateBasis::make(small_set, rho, T), rho).value;
    double v_big = q_dyn_sym(mu, RateBasis::make(big_set, rho, T), rho).value;
    CHECK(v_small >= 0.0);
    CHECK(v_big >= v_small - 1e-12);
}

TEST_CASE("singular gram falls back to the pseudo-inverse with a flag") {
    double rho = 0.75, T = 0.4;
    TestFunction b = TestFunction::bump(1.0, 0.0, 0.9);
    RateBasis dup = RateBasis::make({b, b}, rho, T);  // rank deficient by construction
    Grid1D grid{-7.0, 7.0, 1024, T, 512};
    MacroscopicPath mu = solve_heat_forced(std::nullopt, b, rho, grid);
    QuadraticRateResult qd = q_dyn_sym(mu, dup, rho);
    CHECK(qd.singular_gram);
    RateBasis single = RateBasis::make({b}, rho, T);
    QuadraticRateResult qs = q_dyn_sym(mu, single, rho);
    CHECK(qd.value == doctest::Approx(qs.value).epsilon(1e-8));
}

TEST_CASE("q_ini evaluates the initial quadratic functional") {
    double rho = 0.75, T = 0.3;
    TestFunction psi = TestFunction::bump(1.0, 0.0, 0.9);
    std::vector<TestFunction> space_basis = {psi, TestFunction::bump(1.0, 0.7, 0.8)};
    Grid1D grid{-7.0, 7.0, 2048, T, 512};
    MacroscopicPath mu = solve_heat_forced(psi, std::nullopt, rho, grid);

    QuadraticRateResult qi = q_ini(mu, space_basis, rho);
    double target = psi.l2_sq() / (2.0 * coeff_B(rho));  // (16/3) ||psi||^2 at rho = 3/4
    CHECK(target == doctest::Approx(16.0 / 3.0 * psi.l2_sq()).epsilon(1e-12));
    CHECK(std::abs(qi.value - target) / target < 0.02);

    MacroscopicPath zero = solve_heat_forced(std::nullopt, std::nullopt, rho, grid);
    CHECK(q_ini(zero, space_basis, rho).value == doctest::Approx(0.0));
}

TEST_CASE("asym rate check: zero on transport paths, infinite on heat paths") {
    double rho = 0.75, T = 0.5;
    std::vector<TestFunction> funcs = {TestFunction::bump(1.0, 0.0, 0.9),
                                       TestFunction::bump(1.0, 0.5, 0.8).with_time_mod(
                                           TestFunction::TimeMod::poly, 1.0)};
    RateBasis basis = RateBasis::make(funcs, rho, T);
    Grid1D grid{-8.0, 8.0, 4096, T, 2048};
    TestFunction phi = TestFunction::bump(1.0, 0.0, 1.0);

    MacroscopicPath transport = solve_transport(phi, rho, grid);
    AsymRateCheck zero = q_dyn_asym_check(transport, basis, rho);
    CHECK(zero.is_zero);
    CHECK(zero.max_rel_residual <= 1e-8);

    MacroscopicPath heat = solve_heat_forced(phi, std::nullopt, rho, grid);
    AsymRateCheck inf = q_dyn_asym_check(heat, basis, rho);
    CHECK_FALSE(inf.is_zero);
    CHECK(inf.max_rel_residual > 1e-3);

    MacroscopicPath zero_path = solve_heat_forced(std::nullopt, std::nullopt, rho, grid);
    CHECK(q_dyn_asym_check(zero_path, basis, rho).is_zero);
}
