#include "fep/observables.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace fep {

namespace {

// inclusive site range covering the support of H around center_site
std::pair<std::int64_t, std::int64_t> support_sites(const TestFunction& H, std::int64_t N,
                                                    std::int64_t center_site) {
    double n = static_cast<double>(N);
    double c = H.center(), r = H.support_radius();
    auto lo = center_site + static_cast<std::int64_t>(std::floor((c - r) * n)) - 1;
    auto hi = center_site + static_cast<std::int64_t>(std::ceil((c + r) * n)) + 1;
    return {lo, hi};
}

double base_rate_of(ModelKind base, const Configuration& c, std::int64_t x) {
    return base == ModelKind::symmetric ? static_cast<double>(rate_sym(c, x))
                                        : static_cast<double>(rate_asym(c, x));
}

}  // namespace

FieldSample field_serial(const Configuration& config, const TestFunction& H, double rho, double a_N,
                         std::int64_t N, double t, std::int64_t center_site) {
    auto [lo, hi] = support_sites(H, N, center_site);
    if (hi - lo + 1 > config.size())
        throw SupportExceedsRing("test-function support wider than the ring");
    double n = static_cast<double>(N);
    double sum = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x)
        sum += (config.get(x) - rho) * H.value(static_cast<double>(x - center_site) / n);
    return {t, H.psi(t) * sum / a_N};
}

FieldSample field(const Configuration& config, const TestFunction& H, double rho, double a_N,
                  std::int64_t N, double t, std::int64_t center_site) {
    auto [lo, hi] = support_sites(H, N, center_site);
    if (hi - lo + 1 > config.size())
        throw SupportExceedsRing("test-function support wider than the ring");
    double n = static_cast<double>(N);
    const std::int64_t chunks = 256;
    std::int64_t total = hi - lo + 1;
    std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t ch = 0; ch < chunks; ++ch) {
        std::int64_t b0 = lo + ch * total / chunks;
        std::int64_t b1 = lo + (ch + 1) * total / chunks;
        double s = 0.0;
        for (std::int64_t x = b0; x < b1; ++x)
            s += (config.get(x) - rho) * H.value(static_cast<double>(x - center_site) / n);
        partial[static_cast<std::size_t>(ch)] = s;
    }
    double sum = 0.0;
    for (double s : partial) sum += s;
    return {t, H.psi(t) * sum / a_N};
}

double block_residual(const Configuration& config, const LocalFunction& g, std::int64_t ell,
                      std::int64_t x, double rho) {
    if (2 * ell + 1 > config.size()) throw WindowTooLarge("block window exceeds ring size");
    std::int64_t ell_p = ell - g.s_g();
    if (ell_p < 0) throw WindowTooLarge("block narrower than the local function support");
    double avg = 0.0;
    for (std::int64_t y = -ell_p; y <= ell_p; ++y) avg += g.eval(config, x + y);
    avg /= static_cast<double>(2 * ell_p + 1);
    double gt = exact_local_expectation(g, rho);
    double gtp = exact_local_expectation_drho(g, rho);
    return avg - gt - gtp * (block_average(config, x, ell) - rho);
}

// --- FieldObserver ---

FieldObserver::FieldObserver(TestFunction H, double rho, double a_N)
    : H_(std::move(H)), rho_(rho), a_N_(a_N) {}

void FieldObserver::on_start(const SimulationEngine& sim) {
    auto [lo, hi] = support_sites(H_, sim.N(), sim.center_site());
    if (hi - lo + 1 > sim.L()) throw SupportExceedsRing("test-function support wider than the ring");
    lo_ = std::max<std::int64_t>(lo, 0);
    hi_ = std::min<std::int64_t>(hi, sim.L() - 1);
    h0_.assign(static_cast<std::size_t>(hi_ - lo_ + 2), 0.0);
    for (std::int64_t x = lo_; x <= hi_ + 1; ++x)
        h0_[static_cast<std::size_t>(x - lo_)] = x <= sim.L() - 1 ? H_.value(sim.coord(x)) : 0.0;
    base_sum_ = 0.0;
    const Configuration& c = sim.config();
    for (std::int64_t x = lo_; x <= hi_; ++x)
        base_sum_ += (c.get(x) - rho_) * h0_[static_cast<std::size_t>(x - lo_)];
}

void FieldObserver::on_event(double, std::int64_t bond, const SimulationEngine& sim) {
    if (bond + 1 < lo_ || bond > hi_) return;
    const Configuration& c = sim.config();
    double h0x = bond >= lo_ && bond <= hi_ ? h0_[static_cast<std::size_t>(bond - lo_)] : 0.0;
    double h0x1 = bond + 1 >= lo_ && bond + 1 <= hi_ + 1 ? h0_[static_cast<std::size_t>(bond + 1 - lo_)] : 0.0;
    base_sum_ += (c.get(bond) - c.get(bond + 1)) * (h0x - h0x1);
}

void FieldObserver::on_sample(double t, const SimulationEngine&) {
    samples_.push_back({t, H_.psi(t) * base_sum_ / a_N_});
}

// --- MartingaleObserver ---

MartingaleObserver::MartingaleObserver(TestFunction H, double rho, double a_N)
    : H_(std::move(H)), rho_(rho), a_N_(a_N) {}

void MartingaleObserver::on_start(const SimulationEngine& sim) {
    if (sim.model().tilted()) throw Error("exponential martingale log requires the untilted generator");
    N_ = sim.N();
    L_ = sim.L();
    center_ = sim.center_site();
    base_ = sim.model().base;
    speed_ = sim.speed_factor();
    kappa_ = a_N_ / static_cast<double>(N_);
    prefactor_ = a_N_ * a_N_ / static_cast<double>(N_);
    const_psi_ = !H_.time_dependent();

    auto [slo, shi] = support_sites(H_, N_, center_);
    if (shi - slo + 1 > L_) throw SupportExceedsRing("test-function support wider than the ring");
    lo_ = std::max<std::int64_t>(slo - 1, 0);
    hi_ = std::min<std::int64_t>(shi, L_ - 2);
    std::size_t nb = static_cast<std::size_t>(hi_ - lo_ + 1);

    h0_.assign(nb + 1, 0.0);
    for (std::int64_t x = lo_; x <= hi_ + 1; ++x) h0_[static_cast<std::size_t>(x - lo_)] = H_.value(sim.coord(x));
    gap_.assign(nb, 0.0);
    exp_p_.assign(nb, 1.0);
    exp_m_.assign(nb, 1.0);
    for (std::size_t i = 0; i < nb; ++i) {
        gap_[i] = h0_[i] - h0_[i + 1];
        exp_p_[i] = std::exp(kappa_ * gap_[i]);
        exp_m_[i] = std::exp(-kappa_ * gap_[i]);
    }
    contrib_.assign(nb, 0.0);
    if (!const_psi_) {
        for (int k = 0; k < kMoments; ++k) {
            zeta_pow_[k].assign(nb, 0.0);
            mcontrib_[k].assign(nb, 0.0);
        }
        for (std::size_t i = 0; i < nb; ++i) {
            double z = kappa_ * gap_[i];
            double p = 1.0;
            for (int k = 0; k < kMoments; ++k) {
                p *= z;
                zeta_pow_[k][i] = p;
            }
        }
    }
    refresh_sums(sim.config());
    mu0_ = H_.psi(0.0) * base_sum_ / a_N_;
    integral_ = 0.0;
    updates_ = 0;
}

double MartingaleObserver::bond_term_exact(const Configuration& c, std::int64_t x) const {
    auto i = static_cast<std::size_t>(x - lo_);
    if (gap_[i] == 0.0) return 0.0;
    double cb = base_rate_of(base_, c, x);
    if (cb == 0.0) return 0.0;
    int s = c.get(x + 1) - c.get(x);
    return cb * ((s > 0 ? exp_p_[i] : exp_m_[i]) - 1.0);
}

void MartingaleObserver::refresh_sums(const Configuration& c) {
    base_sum_ = 0.0;
    for (std::int64_t x = lo_; x <= hi_ + 1 && x < L_; ++x)
        base_sum_ += (c.get(x) - rho_) * h0_[static_cast<std::size_t>(x - lo_)];
    exact_sum_ = 0.0;
    for (std::int64_t x = lo_; x <= hi_; ++x) {
        auto i = static_cast<std::size_t>(x - lo_);
        contrib_[i] = bond_term_exact(c, x);
        exact_sum_ += contrib_[i];
    }
    if (!const_psi_) {
        for (int k = 0; k < kMoments; ++k) moment_sum_[k] = 0.0;
        for (std::int64_t x = lo_; x <= hi_; ++x) {
            auto i = static_cast<std::size_t>(x - lo_);
            double cb = gap_[i] != 0.0 ? base_rate_of(base_, c, x) : 0.0;
            int s = c.get(x + 1) - c.get(x);
            double sk = 1.0;
            for (int k = 0; k < kMoments; ++k) {
                sk *= s;
                mcontrib_[k][i] = cb * sk * zeta_pow_[k][i];
                moment_sum_[k] += mcontrib_[k][i];
            }
        }
    }
}

double MartingaleObserver::jump_sum(double psi) const {
    if (const_psi_) return speed_ * exact_sum_;
    double acc = 0.0;
    double pk = 1.0;
    double fact = 1.0;
    for (int k = 0; k < kMoments; ++k) {
        pk *= psi;
        fact *= static_cast<double>(k + 1);
        acc += pk * moment_sum_[k] / fact;
    }
    return speed_ * acc;
}

void MartingaleObserver::on_interval(double t0, double t1, const SimulationEngine&) {
    if (const_psi_) {
        integral_ += speed_ * exact_sum_ * (t1 - t0);
        return;
    }
    // Gauss-Legendre order 4; only H depends on s within the interval
    static constexpr double nodes[2] = {0.3399810435848563, 0.8611363115940526};
    static constexpr double weights[2] = {0.6521451548625461, 0.3478548451374538};
    double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
    double acc = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (double sgn : {1.0, -1.0}) {
            double s = mid + sgn * half * nodes[i];
            double f = prefactor_ * H_.dpsi(s) * base_sum_ / a_N_ + jump_sum(H_.psi(s));
            acc += weights[i] * f;
        }
    }
    integral_ += acc * half;
}

void MartingaleObserver::on_event(double, std::int64_t bond, const SimulationEngine& sim) {
    const Configuration& c = sim.config();
    if (bond >= lo_ - 2 && bond <= hi_ + 2) {
        if (bond >= lo_ - 1 && bond <= hi_) {
            // base field sum changes only through sites with H0 != 0
            double h0x = bond >= lo_ ? h0_[static_cast<std::size_t>(bond - lo_)] : 0.0;
            double h0x1 = h0_[static_cast<std::size_t>(bond + 1 - lo_)];
            base_sum_ += (c.get(bond) - c.get(bond + 1)) * (h0x - h0x1);
        }
        for (std::int64_t y = std::max(bond - 2, lo_); y <= std::min(bond + 2, hi_); ++y) {
            auto i = static_cast<std::size_t>(y - lo_);
            if (gap_[i] == 0.0) continue;
            double fresh = bond_term_exact(c, y);
            exact_sum_ += fresh - contrib_[i];
            contrib_[i] = fresh;
            if (!const_psi_) {
                double cb = base_rate_of(base_, c, y);
                int s = c.get(y + 1) - c.get(y);
                double sk = 1.0;
                for (int k = 0; k < kMoments; ++k) {
                    sk *= s;
                    double mfresh = cb * sk * zeta_pow_[k][i];
                    moment_sum_[k] += mfresh - mcontrib_[k][i];
                    mcontrib_[k][i] = mfresh;
                }
            }
        }
    }
    if (++updates_ % (1u << 20) == 0) refresh_sums(c);
}

void MartingaleObserver::on_sample(double t, const SimulationEngine&) {
    double mu_t = H_.psi(t) * base_sum_ / a_N_;
    log_.times.push_back(t);
    log_.log_m.push_back(prefactor_ * (mu_t - mu0_) - integral_);
}

// --- BgObserver ---

BgObserver::BgObserver(LocalFunction g, TestFunction H, double rho, double a_N)
    : g_(std::move(g)), H_(std::move(H)), rho_(rho), a_N_(a_N) {
    g_tilde_ = exact_local_expectation(g_, rho_);
    g_tilde_prime_ = exact_local_expectation_drho(g_, rho_);
}

void BgObserver::on_start(const SimulationEngine& sim) {
    N_ = sim.N();
    L_ = sim.L();
    center_ = sim.center_site();
    auto [slo, shi] = support_sites(H_, N_, center_);
    if (shi - slo + 1 > L_) throw SupportExceedsRing("test-function support wider than the ring");
    lo_ = std::max<std::int64_t>(slo, 0);
    hi_ = std::min<std::int64_t>(shi, L_ - 1);
    h0_.assign(static_cast<std::size_t>(hi_ - lo_ + 1), 0.0);
    h_total_ = 0.0;
    for (std::int64_t x = lo_; x <= hi_; ++x) {
        h0_[static_cast<std::size_t>(x - lo_)] = H_.value(sim.coord(x));
        h_total_ += h0_[static_cast<std::size_t>(x - lo_)];
    }
    refresh(sim.config());
    integral_ = 0.0;
    sup_ = 0.0;
}

void BgObserver::refresh(const Configuration& c) {
    sum_g_ = 0.0;
    sum_eta_ = 0.0;
    g_cache_.assign(static_cast<std::size_t>(hi_ - lo_ + 1), 0.0);
    for (std::int64_t x = lo_; x <= hi_; ++x) {
        double h = h0_[static_cast<std::size_t>(x - lo_)];
        g_cache_[static_cast<std::size_t>(x - lo_)] = g_.eval(c, x) * h;
        sum_g_ += g_cache_[static_cast<std::size_t>(x - lo_)];
        sum_eta_ += (c.get(x) - rho_) * h;
    }
}

void BgObserver::on_interval(double t0, double t1, const SimulationEngine&) {
    double w = (sum_g_ - g_tilde_ * h_total_ - g_tilde_prime_ * sum_eta_) / a_N_;
    integral_ += w * (t1 - t0);
    sup_ = std::max(sup_, std::abs(integral_));
}

void BgObserver::on_event(double, std::int64_t bond, const SimulationEngine& sim) {
    std::int64_t sg = g_.s_g();
    if (bond + 1 + sg < lo_ || bond - sg > hi_) return;
    const Configuration& c = sim.config();
    double h0x = bond >= lo_ && bond <= hi_ ? h0_[static_cast<std::size_t>(bond - lo_)] : 0.0;
    double h0x1 = bond + 1 >= lo_ && bond + 1 <= hi_ ? h0_[static_cast<std::size_t>(bond + 1 - lo_)] : 0.0;
    sum_eta_ += (c.get(bond) - c.get(bond + 1)) * (h0x - h0x1);
    // g terms whose window overlaps the swapped pair
    for (std::int64_t x = std::max(bond - sg, lo_); x <= std::min(bond + 1 + sg, hi_); ++x) {
        auto i = static_cast<std::size_t>(x - lo_);
        double fresh = g_.eval(c, x) * h0_[i];
        sum_g_ += fresh - g_cache_[i];
        g_cache_[i] = fresh;
    }
}

void BgObserver::on_sample(double t, const SimulationEngine&) {
    times_.push_back(t);
    integral_series_.push_back(integral_);
    sup_series_.push_back(sup_);
}

// --- StateFreqObserver ---

void StateFreqObserver::on_sample(double, const SimulationEngine& sim) {
    const Configuration& c = sim.config();
    std::uint32_t mask = 0;
    for (std::int64_t x = 0; x < sim.L(); ++x) mask |= static_cast<std::uint32_t>(c.get(x)) << x;
    int idx = gen_->state_index(mask);
    if (idx < 0) throw Error("visited state outside the enumerated space");
    ++counts_[static_cast<std::size_t>(idx)];
}

// --- BlockProfileObserver ---

BlockProfileObserver::BlockProfileObserver(double rho, double a_N, double u_lo, double u_hi,
                                           std::int64_t block_sites)
    : rho_(rho), a_N_(a_N), u_lo_(u_lo), u_hi_(u_hi), block_(block_sites) {}

void BlockProfileObserver::on_sample(double t, const SimulationEngine& sim) {
    double n = static_cast<double>(sim.N());
    auto site_lo = sim.center_site() + static_cast<std::int64_t>(std::floor(u_lo_ * n));
    auto site_hi = sim.center_site() + static_cast<std::int64_t>(std::ceil(u_hi_ * n));
    std::int64_t nblocks = (site_hi - site_lo + 1) / block_;
    if (centers_.empty()) {
        for (std::int64_t b = 0; b < nblocks; ++b) {
            double mid = static_cast<double>(site_lo + b * block_) + 0.5 * static_cast<double>(block_ - 1);
            centers_.push_back((mid - static_cast<double>(sim.center_site())) / n);
        }
    }
    const Configuration& c = sim.config();
    std::vector<double> prof(static_cast<std::size_t>(nblocks), 0.0);
    for (std::int64_t b = 0; b < nblocks; ++b) {
        std::int64_t s0 = site_lo + b * block_;
        double acc = 0.0;
        for (std::int64_t x = s0; x < s0 + block_; ++x) acc += c.get(x);
        prof[static_cast<std::size_t>(b)] =
            (acc / static_cast<double>(block_) - rho_) * n / a_N_;
    }
    times_.push_back(t);
    profiles_.push_back(std::move(prof));
}

// --- replay helpers ---

MartingaleLog exp_martingale(const EventTrace& trace, const RateModel& model, std::int64_t N,
                             const TestFunction& H, double rho, double a_N,
                             const std::vector<double>& sample_times) {
    MartingaleObserver obs(H, rho, a_N);
    Observer* list[] = {&obs};
    SimOptions opts;
    opts.sample_times = sample_times;
    replay(trace, model, N, list, opts);
    return obs.log();
}

std::pair<double, double> bg_residual(const EventTrace& trace, const RateModel& model, std::int64_t N,
                                      const LocalFunction& g, const TestFunction& H, double rho,
                                      double a_N) {
    BgObserver obs(g, H, rho, a_N);
    Observer* list[] = {&obs};
    SimOptions opts;
    opts.sample_times = {trace.horizon};
    replay(trace, model, N, list, opts);
    return {obs.integral().back(), obs.final_sup()};
}

}  // namespace fep
