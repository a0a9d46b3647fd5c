#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "fep/errors.hpp"
#include "fep/lattice.hpp"
#include "fep/rng.hpp"
#include "fep/testfunction.hpp"

namespace fep {

/// Stationary state at supercritical density rho in (1/2, 1), realized as a
/// two-state Markov chain: from an occupied site the next site is occupied
/// with probability d(rho) = (2 rho - 1) / rho; an empty site is always
/// followed by an occupied one.
struct GrandCanonical {
    explicit GrandCanonical(double density) : rho(density) {
        if (!(rho > 0.5 && rho < 1.0)) throw InvalidDensity(rho);
    }
    double rho;
    double d() const { return (2.0 * rho - 1.0) / rho; }
    double d_tilde() const { return (1.0 - rho) / rho; }
};

/// Conditioning window: 2*ell+1 sites holding exactly k particles, with
/// prescribed boundary occupancies just outside the window.
struct CanonicalWindow {
    std::int64_t ell;
    std::int64_t k;
    int a;
    int b;
};

/// Locally perturbed state with site density rho + (a_N / N) phi(x / N).
struct PerturbedMeasure {
    PerturbedMeasure(double density, TestFunction profile, double a_N_, std::int64_t N_);
    double rho;
    TestFunction phi;
    double a_N;
    std::int64_t N;
    double eps() const { return a_N / static_cast<double>(N); }
    double density_at(double u) const { return rho + eps() * phi.value(u); }
};

/// Function of the 2*s+1 sites centered at the origin, tabulated over all
/// windows. Bit i of a window index holds the occupancy of site i - s.
class LocalFunction {
  public:
    LocalFunction(int support_half_width, std::function<double(unsigned)> fn);

    static LocalFunction occupancy();      // eta_0
    static LocalFunction gradient_h();     // tau_0 h
    static LocalFunction bond_activity();  // c_{0,1}(eta) (eta_0 - eta_1)^2

    int s_g() const { return s_g_; }
    int window_length() const { return 2 * s_g_ + 1; }
    double eval_window(unsigned bits) const { return table_[bits]; }
    double eval(const Configuration& config, std::int64_t x) const;

  private:
    int s_g_;
    std::vector<double> table_;
};

// --- grand-canonical sampling ---

/// Open chain segment of the given length (sites 0..len-1): first site
/// Bernoulli(rho), then the two-state chain. Always ergodic as a word.
Configuration sample_gc_segment(const GrandCanonical& spec, std::int64_t len, Rng& rng);

/// Ring sample: chain segment with the seam repaired (if sites L-1 and 0 are
/// both empty, site L-1 is filled). The repair is an O(1/L) perturbation at
/// the seam; keep test-function supports away from site 0.
Configuration sample_gc_ring(const GrandCanonical& spec, std::int64_t L, Rng& rng);

// --- segment probabilities ---

/// Closed-form marginal of an ergodic word sigma:
/// (1-rho) d^{2p - l + 1 - sigma(1) - sigma(l)} (1-d)^{l - 1 - p}.
/// Throws NonErgodicWord when sigma has adjacent zeros.
double segment_pmf(const std::vector<int>& word, const GrandCanonical& spec);

/// Markov-chain product form of the same marginal (independent route used by
/// tests and the acceptance suite; 0 for non-ergodic words).
double segment_pmf_chain(const std::vector<int>& word, const GrandCanonical& spec);

/// Analytic d/drho of segment_pmf.
double segment_pmf_drho(const std::vector<int>& word, const GrandCanonical& spec);

// --- canonical (conditioned) sampling ---

/// Exact sampler for the chain conditioned on the particle count and the
/// boundary values: backward dynamic programming over
/// (position, particles used, last state), then forward sampling.
class CanonicalSampler {
  public:
    /// Throws EmptySupport when no compatible ergodic word exists.
    CanonicalSampler(const CanonicalWindow& window, const GrandCanonical& weights);

    std::vector<int> sample(Rng& rng) const;
    /// Exact conditional probability of one word (0 if incompatible).
    double word_pmf(const std::vector<int>& word) const;
    const CanonicalWindow& window() const { return win_; }

  private:
    CanonicalWindow win_;
    std::int64_t len_;
    // layer-rescaled completion weights, indexed [position][particles][state]
    std::vector<double> table_;
    double w_[2][2];
    double& at(std::int64_t i, std::int64_t j, int s) {
        return table_[static_cast<std::size_t>((i * (win_.k + 1) + j) * 2 + s)];
    }
    double at(std::int64_t i, std::int64_t j, int s) const {
        return table_[static_cast<std::size_t>((i * (win_.k + 1) + j) * 2 + s)];
    }
    std::pair<double, double> step_weights(std::int64_t i, std::int64_t j, int s) const;
};

/// Max absolute difference between the conditional laws computed at two
/// reference densities (diagnostic for the rho-independence of the
/// conditioned measure; exhaustive for ell <= 8, sampled marginals otherwise).
double canonical_rho_dependence(const CanonicalWindow& window, double rho1, double rho2);

// --- perturbed measure ---

/// Inhomogeneous chain sample over sites 0..len-1 with macroscopic
/// coordinate u = (x - center_site) / N.
Configuration sample_perturbed_segment(const PerturbedMeasure& spec, std::int64_t len,
                                       std::int64_t center_site, Rng& rng);
Configuration sample_perturbed_ring(const PerturbedMeasure& spec, std::int64_t L, Rng& rng);

/// Exact finite sum for the relative entropy H(pi^N_{rho,phi} | pi_rho).
double relative_entropy_perturbed(const PerturbedMeasure& spec);
double relative_entropy_perturbed_serial(const PerturbedMeasure& spec);

// --- exact moments ---

/// E_{pi_rho}[g] by enumeration over ergodic windows (s_g <= 6).
double exact_local_expectation(const LocalFunction& g, double rho);
/// Analytic derivative in rho (default route).
double exact_local_expectation_drho(const LocalFunction& g, double rho);
/// Central finite-difference cross-check, step 1e-6.
double exact_local_expectation_drho_fd(const LocalFunction& g, double rho);

/// Monte Carlo route for wide supports: (value, standard error).
std::pair<double, double> mc_local_expectation(const LocalFunction& g, double rho,
                                               std::int64_t samples, Rng& rng);

/// Exact mean and variance of zeta_0 = rho (eta_0 - rho) + (1-rho)(eta_{-1} - rho).
std::pair<double, double> zeta_moments(double rho);

// closed-form coefficients
inline double coeff_A(double rho) { return (1.0 - rho) * (2.0 * rho - 1.0) / rho; }
inline double coeff_A_prime(double rho) { return 1.0 / (rho * rho) - 2.0; }
inline double coeff_B(double rho) { return (2.0 * rho - 1.0) * rho * (1.0 - rho); }
inline double coeff_h_tilde(double rho) { return (2.0 * rho - 1.0) / rho; }
inline double coeff_h_tilde_prime(double rho) { return 1.0 / (rho * rho); }

}  // namespace fep
