#include "fep/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace fep {

namespace {
constexpr double kTinyRate = 1e-300;
}

double tilted_rate(const RateModel& model, const Configuration& config, std::int64_t x, double t,
                   std::int64_t N, std::int64_t center_site) {
    double c = model.base == ModelKind::symmetric ? static_cast<double>(rate_sym(config, x))
                                                  : static_cast<double>(rate_asym(config, x));
    if (!model.tilted() || c == 0.0) return c;
    const TestFunction& H = *model.tilt;
    double n = static_cast<double>(N);
    double kappa = model.a_N / n;
    double u0 = static_cast<double>(x - center_site) / n;
    double u1 = static_cast<double>(x + 1 - center_site) / n;
    double gap = H.psi(t) * (H.value(u0) - H.value(u1));
    if (model.base == ModelKind::symmetric) {
        int s = config.get(x + 1) - config.get(x);
        return c * std::exp(kappa * s * gap);
    }
    return c * std::exp(-kappa * gap);
}

SimulationEngine::SimulationEngine(const Configuration& initial, const RateModel& model,
                                   std::int64_t N, double T, const SimOptions& opts, Rng& rng)
    : config_(initial),
      model_(model),
      N_(N),
      L_(initial.size()),
      center_(initial.size() / 2),
      T_(T),
      opts_(opts),
      rng_(rng) {
    if (T <= 0.0) throw HorizonNonPositive();
    if (!is_ergodic(config_)) throw NonErgodicStart();
    std::sort(opts_.sample_times.begin(), opts_.sample_times.end());
    thinning_ = model_.tilted() && opts_.tilt_method == SimOptions::TiltMethod::thinning;
    if (model_.tilted() && !thinning_ && model_.tilt->time_dependent())
        throw Error("direct method requires a time-independent tilt; use thinning");
    rates_.assign(static_cast<std::size_t>(L_), 0.0);
    if (model_.tilted()) {
        tilt_up_.assign(static_cast<std::size_t>(L_), 1.0);
        tilt_down_.assign(static_cast<std::size_t>(L_), 1.0);
        if (!thinning_) rebuild_tilt_tables(1.0, 1.0);
    }
    refresh_all_rates(0.0, false);
}

double SimulationEngine::speed_factor() const {
    double n = static_cast<double>(N_);
    return model_.speed_exponent() == 2 ? n * n : n;
}

// Per-bond tilt factor tables. For the direct method tilt_up_ / tilt_down_
// hold the exact factors for eta_{x+1} - eta_x = +1 / -1 (symmetric base) or
// the configuration-independent factor (asymmetric base, stored in tilt_up_).
// For thinning both hold the envelope factor sup over the window.
void SimulationEngine::rebuild_tilt_tables(double psi_lo, double psi_hi) {
    const TestFunction& H = *model_.tilt;
    double n = static_cast<double>(N_);
    double kappa = model_.a_N / n;
    for (std::int64_t x = 0; x < L_; ++x) {
        double gap = H.value(coord(x)) - H.value(coord(x + 1));
        auto i = static_cast<std::size_t>(x);
        if (thinning_) {
            double m = std::max(std::abs(psi_lo), std::abs(psi_hi));
            double env = std::exp(std::abs(kappa * gap) * m);
            tilt_up_[i] = env;
            tilt_down_[i] = env;
        } else if (model_.base == ModelKind::symmetric) {
            tilt_up_[i] = std::exp(kappa * gap);
            tilt_down_[i] = std::exp(-kappa * gap);
        } else {
            tilt_up_[i] = std::exp(-kappa * gap);
            tilt_down_[i] = tilt_up_[i];
        }
    }
}

double SimulationEngine::exact_bond_rate(std::int64_t x, double t) const {
    double c = model_.base == ModelKind::symmetric ? static_cast<double>(rate_sym(config_, x))
                                                   : static_cast<double>(rate_asym(config_, x));
    if (!model_.tilted() || c == 0.0) return c;
    if (thinning_) return tilted_rate(model_, config_, x, t, N_, center_);
    auto i = static_cast<std::size_t>(x);
    if (model_.base == ModelKind::asymmetric) return c * tilt_up_[i];
    int s = config_.get(x + 1) - config_.get(x);
    return c * (s > 0 ? tilt_up_[i] : tilt_down_[i]);
}

double SimulationEngine::envelope_bond_rate(std::int64_t x) const {
    double c = model_.base == ModelKind::symmetric ? static_cast<double>(rate_sym(config_, x))
                                                   : static_cast<double>(rate_asym(config_, x));
    if (!model_.tilted() || c == 0.0) return c;
    return c * tilt_up_[static_cast<std::size_t>(x)];
}

void SimulationEngine::refresh_all_rates(double t, bool check_drift) {
    std::vector<double> fresh(static_cast<std::size_t>(L_));
    double total = 0.0;
    for (std::int64_t x = 0; x < L_; ++x) {
        double r = thinning_ ? envelope_bond_rate(x) : exact_bond_rate(x, t);
        fresh[static_cast<std::size_t>(x)] = r;
        total += r;
    }
    if (check_drift) {
        double drift = std::abs(total - fenwick_.total());
        if (drift > opts_.rate_drift_tol * std::max(1.0, total))
            throw Error("total rate drifted by " + std::to_string(drift));
    }
    rates_ = std::move(fresh);
    fenwick_.rebuild(rates_);
}

void SimulationEngine::update_bonds_around(std::int64_t bond, double t) {
    if (!model_.tilted() && L_ >= 8) {
        // one window read covers all five affected bonds
        unsigned bits = config_.bits_window(bond - 3, 8);
        for (std::int64_t off = -2; off <= 2; ++off) {
            std::int64_t y = bond + off;
            if (y < 0) y += L_;
            if (y >= L_) y -= L_;
            unsigned w = (bits >> (off + 2)) & 15u;
            double r = model_.base == ModelKind::symmetric ? static_cast<double>(rate_sym_window(w))
                                                           : static_cast<double>(rate_asym_window(w));
            auto i = static_cast<std::size_t>(y);
            if (r != rates_[i]) {
                fenwick_.add(y, r - rates_[i]);
                rates_[i] = r;
            }
        }
        return;
    }
    for (std::int64_t off = -2; off <= 2; ++off) {
        std::int64_t y = bond + off;
        if (y < 0) y += L_;
        if (y >= L_) y -= L_;
        if (L_ < 5 && off > -2) {
            // avoid double updates on tiny rings
            bool dup = false;
            for (std::int64_t o2 = -2; o2 < off; ++o2) {
                std::int64_t y2 = (bond + o2) % L_;
                if (y2 < 0) y2 += L_;
                if (y2 == y) dup = true;
            }
            if (dup) continue;
        }
        double r = thinning_ ? envelope_bond_rate(y) : exact_bond_rate(y, t);
        auto i = static_cast<std::size_t>(y);
        if (r != rates_[i]) {
            fenwick_.add(y, r - rates_[i]);
            rates_[i] = r;
        }
    }
}

void SimulationEngine::run(std::span<Observer* const> observers) {
    for (auto* o : observers) o->on_start(*this);

    std::size_t si = 0;
    const auto& samples = opts_.sample_times;
    while (si < samples.size() && samples[si] <= 0.0) {
        for (auto* o : observers) o->on_sample(0.0, *this);
        ++si;
    }

    auto advance_with_samples = [&](double target) {
        while (si < samples.size() && samples[si] <= target) {
            double tau = samples[si];
            if (tau > t_) {
                for (auto* o : observers) o->on_interval(t_, tau, *this);
                t_ = tau;
            }
            for (auto* o : observers) o->on_sample(tau, *this);
            ++si;
        }
        if (target > t_) {
            for (auto* o : observers) o->on_interval(t_, target, *this);
            t_ = target;
        }
    };

    std::int64_t window_idx = 0;
    window_len_ = thinning_ ? T_ / static_cast<double>(opts_.thinning_windows) : T_;
    if (thinning_) {
        psi_ref_lo_ = 0.0;
        psi_ref_hi_ = model_.tilt->psi_max_abs(0.0, window_len_);
        rebuild_tilt_tables(psi_ref_lo_, psi_ref_hi_);
        refresh_all_rates(0.0, false);
    }

    const double speed = speed_factor();
    while (t_ < T_) {
        double bound = thinning_ ? std::min(T_, static_cast<double>(window_idx + 1) * window_len_) : T_;
        double total = fenwick_.total();
        double t_next = total > kTinyRate ? t_ + rng_.exponential(total * speed) : T_ + 1.0;
        if (t_next >= bound) {
            advance_with_samples(bound);
            if (bound >= T_) break;
            ++window_idx;
            double w0 = static_cast<double>(window_idx) * window_len_;
            double w1 = std::min(T_, w0 + window_len_);
            psi_ref_hi_ = model_.tilt->psi_max_abs(w0, w1);
            rebuild_tilt_tables(0.0, psi_ref_hi_);
            refresh_all_rates(t_, false);
            continue;
        }

        std::int64_t bond;
        double target = rng_.uniform() * total;
        if (opts_.selector == SimOptions::Selector::fenwick) {
            bond = fenwick_.find(target);
        } else {
            double acc = 0.0;
            bond = L_ - 1;
            for (std::int64_t x = 0; x < L_; ++x) {
                acc += rates_[static_cast<std::size_t>(x)];
                if (target < acc) {
                    bond = x;
                    break;
                }
            }
        }

        advance_with_samples(t_next);
        ++proposals_;
        if (thinning_) {
            double env = rates_[static_cast<std::size_t>(bond)];
            double exact = tilted_rate(model_, config_, bond, t_, N_, center_);
            if (rng_.uniform() * env >= exact) {
                ++rejections_;
                continue;
            }
        }

        config_.swap_bond(bond);
        ++events_;
        if (opts_.record_events) event_log_.push_back({t_, bond});
        for (auto* o : observers) o->on_event(t_, bond, *this);
        update_bonds_around(bond, t_);

        if (events_ % static_cast<std::uint64_t>(opts_.rate_refresh_interval) == 0)
            refresh_all_rates(t_, true);
        if (events_ % static_cast<std::uint64_t>(opts_.ergodic_check_interval) == 0 && !is_ergodic(config_))
            throw Error("ergodic component left during simulation");
        if (opts_.max_events > 0 && events_ >= static_cast<std::uint64_t>(opts_.max_events)) break;
    }

    if (!is_ergodic(config_)) throw Error("ergodic component left during simulation");
    for (auto* o : observers) o->on_finish(*this);
}

RunResult SimulationEngine::take_result() {
    RunResult r;
    r.final_config = config_;
    r.events = events_;
    r.total_time = t_;
    r.proposals = proposals_;
    r.rejections = rejections_;
    r.event_log = std::move(event_log_);
    return r;
}

RunResult simulate(const Configuration& initial, const RateModel& model, std::int64_t N, double T,
                   std::span<Observer* const> observers, Rng& rng, const SimOptions& opts) {
    SimulationEngine engine(initial, model, N, T, opts, rng);
    engine.run(observers);
    return engine.take_result();
}

void replay(const EventTrace& trace, const RateModel& model, std::int64_t N,
            std::span<Observer* const> observers, const SimOptions& opts) {
    // drive observers through a recorded trajectory without touching RNG
    Rng dummy(0);
    SimOptions o = opts;
    o.record_events = false;
    SimulationEngine engine(trace.initial, model, N, trace.horizon, o, dummy);
    for (auto* ob : observers) ob->on_start(engine);
    std::size_t si = 0;
    std::vector<double> samples = opts.sample_times;
    std::sort(samples.begin(), samples.end());
    while (si < samples.size() && samples[si] <= 0.0) {
        for (auto* ob : observers) ob->on_sample(0.0, engine);
        ++si;
    }
    double t = 0.0;
    auto advance = [&](double target) {
        while (si < samples.size() && samples[si] <= target) {
            double tau = samples[si];
            if (tau > t) {
                for (auto* ob : observers) ob->on_interval(t, tau, engine);
                t = tau;
            }
            for (auto* ob : observers) ob->on_sample(tau, engine);
            ++si;
        }
        if (target > t) {
            for (auto* ob : observers) ob->on_interval(t, target, engine);
            t = target;
        }
    };
    for (const auto& ev : trace.jumps) {
        advance(ev.time);
        engine.apply_replay_event(ev.bond);
        for (auto* ob : observers) ob->on_event(ev.time, ev.bond, engine);
    }
    advance(trace.horizon);
    for (auto* ob : observers) ob->on_finish(engine);
}

}  // namespace fep
