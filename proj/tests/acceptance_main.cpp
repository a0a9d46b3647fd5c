// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fep/harness.hpp"
#include "fep/hydro.hpp"
#include "fep/lattice.hpp"
#include "fep/measures.hpp"
#include "fep/stats.hpp"

using namespace fep;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %2d: %-34s %s  (%.1f s)\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void criterion_1_gradient_identity() {
    Timer timer;
    bool pass = true;
    for (unsigned w = 0; w < 16; ++w) {
        int eta_x = static_cast<int>((w >> 1) & 1u);
        int eta_x1 = static_cast<int>((w >> 2) & 1u);
        int lhs = rate_sym_window(w) * (eta_x - eta_x1);
        int rhs = h_window(w & 7u) - h_window((w >> 1) & 7u);
        if (lhs != rhs) pass = false;
    }
    double s = timer.seconds();
    report(1, "gradient identity", pass && s < 1e-3,
           "exact over 16 windows, runtime " + fmt(s * 1e6) + " us", s);
}

void criterion_2_coefficients() {
    Timer timer;
    bool pass = true;
    std::string detail;
    for (double rho : {0.6, 0.75, 0.9}) {
        double h_dev = std::abs(exact_local_expectation(LocalFunction::gradient_h(), rho) -
                                coeff_h_tilde(rho));
        double a_dev = std::abs(exact_local_expectation(LocalFunction::bond_activity(), rho) -
                                2.0 * coeff_A(rho));
        double b_dev = std::abs(zeta_moments(rho).second - coeff_B(rho));
        double worst = std::max({h_dev, a_dev, b_dev});
        if (worst > 1e-12) pass = false;
        if (rho == 0.75) detail = "max |dev| = " + fmt(worst);
    }
    report(2, "closed-form coefficients", pass, detail + " (tol 1e-12)", timer.seconds());
}

void criterion_3_segment_pmf() {
    Timer timer;
    double worst = 0.0;
    for (double rho : {0.6, 0.75, 0.9}) {
        GrandCanonical gc(rho);
        for (int len = 1; len <= 10; ++len) {
            double total = 0.0;
            std::vector<int> word(static_cast<std::size_t>(len));
            for (unsigned bits = 0; bits < (1u << len); ++bits) {
                for (int i = 0; i < len; ++i)
                    word[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1u);
                double chain = segment_pmf_chain(word, gc);
                total += chain;
                if (chain > 0.0) worst = std::max(worst, std::abs(chain - segment_pmf(word, gc)));
            }
            worst = std::max(worst, std::abs(total - 1.0));
        }
    }
    report(3, "segment pmf identity", worst <= 1e-12, "max |dev| = " + fmt(worst) + " (tol 1e-12)",
           timer.seconds());
}

void criterion_4_stationarity() {
    Timer timer;
    bool pass = true;
    std::string detail;
    for (auto model : {ModelKind::symmetric, ModelKind::asymmetric}) {
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::stationarity;
        cfg.model = model;
        cfg.L = 10;
        cfg.k = 7;
        cfg.events = 1000000;
        cfg.state_samples = 5000;
        cfg.seed = 20240901;
        ExperimentResult res = run_stationarity(cfg);
        double p = res.metrics.at("p_value");
        if (!(p > 0.001)) pass = false;
        detail += (model == ModelKind::symmetric ? "sym p=" : " asym p=") + fmt(p);
    }
    report(4, "small-ring stationarity", pass, detail + " (need p > 0.001)", timer.seconds());
}

void criterion_5_static_clt() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::clt;
    cfg.rho = 0.75;
    cfg.N = 2000;
    cfg.gamma = 0.5;  // a_N = sqrt(N)
    cfg.samples = 10000;
    cfg.seed = 51;
    cfg.tf_profile = "bump";
    cfg.tf_width = 2.0;
    cfg.tf_amplitude = 1.0;
    ExperimentResult res = run_clt(cfg);
    double rel = res.metrics.at("rel_error");
    report(5, "static CLT variance", res.all_pass(),
           "Var=" + fmt(res.metrics.at("variance")) + " target=" + fmt(res.metrics.at("target")) +
               " rel=" + fmt(rel) + " (tol 5%)",
           timer.seconds());
}

void criterion_6_mean_one_martingale() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::martingale;
    cfg.rho = 0.75;
    cfg.N = 500;
    cfg.gamma = 0.7;
    cfg.T = 0.01;
    cfg.replicas = 1000;
    cfg.seed = 61;
    cfg.tf_profile = "bump";
    cfg.tf_width = 1.0;
    cfg.tf_amplitude = 2.0;
    ExperimentResult res = run_martingale(cfg);
    report(6, "mean-one exponential martingale", res.all_pass(),
           "mean=" + fmt(res.metrics.at("mean_M")) + " se=" + fmt(res.metrics.at("se_M")) +
               " (need |mean-1| <= 3 se)",
           timer.seconds());
}

void criterion_7_hydrodynamic_limit() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::hydro;
    cfg.rho = 0.75;
    cfg.N = 1000;
    cfg.gamma = 0.75;
    cfg.T = 0.04;
    cfg.replicas = 500;
    cfg.seed = 71;
    cfg.tf_profile = "bump";
    cfg.tf_width = 0.3;
    cfg.tf_amplitude = 6.0;
    cfg.block_sites = 192;
    ExperimentResult res = run_hydro_experiment(cfg);
    std::string detail;
    for (int i = 0; i < 3; ++i)
        detail += "D" + std::to_string(i) + "=" + fmt(res.metrics.at("debiased_" + std::to_string(i))) + " ";
    report(7, "tilted hydrodynamic limit", res.all_pass(), detail + "(tol 10% after noise floor)",
           timer.seconds());
}

void criterion_8_transport_limit() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::transport;
    cfg.rho = 0.75;
    cfg.N = 2000;
    cfg.gamma = 0.75;
    cfg.T = 0.5;
    cfg.transport_time = 0.5;
    cfg.replicas = 400;
    cfg.seed = 81;
    cfg.tf_profile = "bump";
    cfg.tf_width = 1.0;
    cfg.tf_amplitude = 1.0;
    ExperimentResult res = run_transport_experiment(cfg);
    bool speed_ok = std::abs(res.metrics.at("A_prime") + 2.0 / 9.0) < 1e-14;
    report(8, "asymmetric transport limit", res.all_pass() && speed_ok,
           "corr=" + fmt(res.metrics.at("correlation")) + " A'=" + fmt(res.metrics.at("A_prime")) +
               " (need corr >= 0.9, A' = -2/9)",
           timer.seconds());
}

void criterion_9_entropy_limit() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::entropy;
    cfg.rho = 0.75;
    cfg.N = 1000000;
    cfg.gamma = 0.75;
    cfg.tf_profile = "bump";
    cfg.tf_width = 1.0;
    cfg.tf_normalize = true;
    ExperimentResult res = run_entropy(cfg);
    report(9, "relative entropy limit", res.all_pass(),
           "scaled=" + fmt(res.checks.back().value) + " target=16/3 rel=" +
               fmt(res.metrics.at("rel_error")) + " (tol 2%)",
           timer.seconds());
}

void criterion_10_equivalence_of_ensembles() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::ensembles;
    cfg.rho = 0.75;
    cfg.ell_list = {32, 64, 128, 256, 512};
    cfg.ens_samples = 20000;
    cfg.seed = 101;
    ExperimentResult res = run_ensembles(cfg);
    report(10, "equivalence of ensembles", res.all_pass(),
           "C dev=" + fmt(res.metrics.at("C_max_rel_dev")) + " of mean " +
               fmt(res.metrics.at("C_mean")) + " (tol 25%)",
           timer.seconds());
}

void criterion_11_rate_identities() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::rate;
    cfg.rho = 0.75;
    cfg.T = 0.5;
    ExperimentResult res = run_rate_experiment(cfg);
    report(11, "rate-functional identities", res.all_pass(),
           "q_dyn=" + fmt(res.metrics.at("q_dyn")) + " target=" + fmt(res.metrics.at("q_dyn_target")) +
               ", asym residuals " + fmt(res.metrics.at("asym_residual_transport")) + " / " +
               fmt(res.metrics.at("asym_residual_heat")),
           timer.seconds());
}

void criterion_12_bg_residual_trend() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::bg;
    cfg.rho = 0.75;
    cfg.gamma = 0.75;
    cfg.T = 0.01;
    cfg.replicas = 24;
    cfg.seed = 121;
    cfg.tf_profile = "bump";
    cfg.tf_width = 0.5;
    cfg.tf_amplitude = 1.0;
    cfg.n_list = {250, 500, 1000, 2000};
    ExperimentResult res = run_bg_experiment(cfg);
    std::string detail = "sup residual:";
    for (std::int64_t n : cfg.n_list)
        detail += " " + fmt(res.metrics.at("sup_residual_N=" + std::to_string(n)));
    report(12, "Boltzmann-Gibbs residual trend", res.all_pass(), detail + " (decreasing in N)",
           timer.seconds());
    std::printf("      note: MDP tail probabilities decay like exp(-a_N^2/N * Q) and are not\n"
                "      estimated directly; criteria 5-11 exercise the martingale, hydrodynamic,\n"
                "      entropy, and rate-functional ingredients instead, and criterion 12 checks\n"
                "      the residual replacement qualitatively.\n");
}

}  // namespace

int main() {
    std::printf("FEP acceptance suite\n====================\n");
    Timer total;
    criterion_1_gradient_identity();
    criterion_2_coefficients();
    criterion_3_segment_pmf();
    criterion_4_stationarity();
    criterion_5_static_clt();
    criterion_6_mean_one_martingale();
    criterion_7_hydrodynamic_limit();
    criterion_8_transport_limit();
    criterion_9_entropy_limit();
    criterion_10_equivalence_of_ensembles();
    criterion_11_rate_identities();
    criterion_12_bg_residual_trend();
    std::printf("====================\n%s (%d failure%s, %.1f s total)\n",
                g_failures == 0 ? "ALL CRITERIA PASS" : "FAILURES PRESENT", g_failures,
                g_failures == 1 ? "" : "s", total.seconds());
    return g_failures == 0 ? 0 : 1;
}
