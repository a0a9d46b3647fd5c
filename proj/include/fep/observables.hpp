#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fep/dynamics.hpp"
#include "fep/lattice.hpp"
#include "fep/measures.hpp"
#include "fep/testfunction.hpp"

namespace fep {

struct FieldSample {
    double t;
    double value;
};

struct MartingaleLog {
    std::vector<double> times;
    std::vector<double> log_m;
};

/// Fluctuation field a_N^{-1} sum_x (eta_x - rho) H(t, x/N), the sum running
/// over H's support around center_site. Throws SupportExceedsRing when the
/// support does not fit on the ring.
FieldSample field(const Configuration& config, const TestFunction& H, double rho, double a_N,
                  std::int64_t N, double t, std::int64_t center_site);
FieldSample field_serial(const Configuration& config, const TestFunction& H, double rho, double a_N,
                         std::int64_t N, double t, std::int64_t center_site);

/// Block-averaged recentered local function:
/// (2 l'+1)^{-1} sum_{|y|<=l'} tau_{x+y} g - g~(rho) - g~'(rho)(eta^l_x - rho),
/// with l' = l - s_g.
double block_residual(const Configuration& config, const LocalFunction& g, std::int64_t ell,
                      std::int64_t x, double rho);

/// Streams mu^N_t(H) at the sample grid.
class FieldObserver : public Observer {
  public:
    FieldObserver(TestFunction H, double rho, double a_N);
    void on_start(const SimulationEngine&) override;
    void on_event(double t, std::int64_t bond, const SimulationEngine&) override;
    void on_sample(double t, const SimulationEngine&) override;
    const std::vector<FieldSample>& samples() const { return samples_; }

  private:
    TestFunction H_;
    double rho_, a_N_;
    double base_sum_ = 0.0;  // sum (eta - rho) H0
    std::vector<double> h0_;  // per-site H0 values (site-indexed)
    std::int64_t lo_ = 0, hi_ = 0;
    std::vector<FieldSample> samples_;
};

/// Streams log M^N_t(H) for an untilted run: boundary terms plus the
/// compensator evaluated from the explicit per-bond exponential sum, with
/// Gauss-Legendre order 4 on each inter-event interval.
class MartingaleObserver : public Observer {
  public:
    MartingaleObserver(TestFunction H, double rho, double a_N);
    void on_start(const SimulationEngine&) override;
    void on_interval(double t0, double t1, const SimulationEngine&) override;
    void on_event(double t, std::int64_t bond, const SimulationEngine&) override;
    void on_sample(double t, const SimulationEngine&) override;
    const MartingaleLog& log() const { return log_; }

  private:
    double jump_sum(double psi) const;
    double bond_term_exact(const Configuration& c, std::int64_t x) const;
    void refresh_sums(const Configuration& c);

    TestFunction H_;
    double rho_, a_N_;
    double kappa_ = 0.0;       // a_N / N
    double prefactor_ = 0.0;   // a_N^2 / N
    double speed_ = 1.0;       // N^theta
    ModelKind base_ = ModelKind::symmetric;
    std::int64_t center_ = 0, L_ = 0, N_ = 1;
    std::int64_t lo_ = 0, hi_ = 0;  // bond range intersecting the support

    std::vector<double> h0_;               // per-site H0
    std::vector<double> gap_;              // per-bond H0(u_x) - H0(u_{x+1})
    std::vector<double> exp_p_, exp_m_;    // e^{+kappa gap}, e^{-kappa gap}
    std::vector<double> contrib_;          // c_x (e^{zeta_x} - 1) cache (constant psi)
    static constexpr int kMoments = 6;
    std::vector<double> zeta_pow_[kMoments];  // (kappa gap)^k
    std::vector<double> mcontrib_[kMoments];  // c_x zeta_x^k caches (varying psi)
    bool const_psi_ = true;

    double base_sum_ = 0.0;   // sum (eta - rho) H0
    double exact_sum_ = 0.0;  // sum c (e^zeta - 1)
    double moment_sum_[kMoments] = {0, 0, 0, 0, 0, 0};
    double mu0_ = 0.0;
    double integral_ = 0.0;
    std::uint64_t updates_ = 0;
    MartingaleLog log_;
};

/// Streams the Boltzmann-Gibbs residual
///   I(t) = int_0^t a_N^{-1} sum_x tau_x V(g, eta(s)) H(x/N) ds,
/// with V(g, eta) = g - g~(rho) - g~'(rho)(eta_0 - rho), plus sup_{s<=t} |I|.
class BgObserver : public Observer {
  public:
    BgObserver(LocalFunction g, TestFunction H, double rho, double a_N);
    void on_start(const SimulationEngine&) override;
    void on_interval(double t0, double t1, const SimulationEngine&) override;
    void on_event(double t, std::int64_t bond, const SimulationEngine&) override;
    void on_sample(double t, const SimulationEngine&) override;

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& integral() const { return integral_series_; }
    const std::vector<double>& sup_abs() const { return sup_series_; }
    double final_sup() const { return sup_; }

  private:
    void refresh(const Configuration& c);

    LocalFunction g_;
    TestFunction H_;
    double rho_, a_N_, g_tilde_ = 0.0, g_tilde_prime_ = 0.0;
    std::int64_t center_ = 0, L_ = 0, N_ = 1, lo_ = 0, hi_ = 0;
    std::vector<double> h0_;
    std::vector<double> g_cache_;  // per-site g(tau_x eta) H0(u_x)
    double sum_g_ = 0.0;     // sum g(tau_x eta) H0(u_x)
    double sum_eta_ = 0.0;   // sum (eta - rho) H0(u_x)
    double h_total_ = 0.0;   // sum H0(u_x)
    double integral_ = 0.0, sup_ = 0.0;
    std::vector<double> times_, integral_series_, sup_series_;
};

/// Tallies state occupancy of a small ring at the sample grid.
class StateFreqObserver : public Observer {
  public:
    explicit StateFreqObserver(const GeneratorMatrix& gen) : gen_(&gen), counts_(gen.states.size(), 0) {}
    void on_sample(double, const SimulationEngine& sim) override;
    const std::vector<std::int64_t>& counts() const { return counts_; }

  private:
    const GeneratorMatrix* gen_;
    std::vector<std::int64_t> counts_;
};

/// Records block-averaged field profiles (N/a_N)(block density - rho) at the
/// sample grid.
class BlockProfileObserver : public Observer {
  public:
    BlockProfileObserver(double rho, double a_N, double u_lo, double u_hi, std::int64_t block_sites);
    void on_sample(double t, const SimulationEngine&) override;
    const std::vector<double>& centers() const { return centers_; }
    const std::vector<std::vector<double>>& profiles() const { return profiles_; }
    const std::vector<double>& times() const { return times_; }

  private:
    double rho_, a_N_, u_lo_, u_hi_;
    std::int64_t block_;
    std::vector<double> centers_;
    std::vector<double> times_;
    std::vector<std::vector<double>> profiles_;
};

/// Replay-based evaluation of the exponential martingale log on a recorded
/// trace (cross-checks the streaming observer).
MartingaleLog exp_martingale(const EventTrace& trace, const RateModel& model, std::int64_t N,
                             const TestFunction& H, double rho, double a_N,
                             const std::vector<double>& sample_times);

/// Replay-based Boltzmann-Gibbs residual: returns (integral at T, sup over [0, T]).
std::pair<double, double> bg_residual(const EventTrace& trace, const RateModel& model, std::int64_t N,
                                      const LocalFunction& g, const TestFunction& H, double rho,
                                      double a_N);

}  // namespace fep
