#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fep/errors.hpp"
#include "fep/exact.hpp"
#include "fep/fenwick.hpp"
#include "fep/lattice.hpp"
#include "fep/rng.hpp"
#include "fep/testfunction.hpp"

namespace fep {

/// Bond-rate model: symmetric (speed N^2), asymmetric (speed N), or either
/// base multiplied by the exponential tilt factor
///   symmetric base: exp{(a_N/N)(eta_{x+1}-eta_x)(H_t(x/N) - H_t((x+1)/N))}
///   asymmetric base: exp{(a_N/N)(H_t((x+1)/N) - H_t(x/N))}
struct RateModel {
    ModelKind base = ModelKind::symmetric;
    std::optional<TestFunction> tilt;  // H
    double a_N = 0.0;

    static RateModel symmetric() { return {ModelKind::symmetric, std::nullopt, 0.0}; }
    static RateModel asymmetric() { return {ModelKind::asymmetric, std::nullopt, 0.0}; }
    static RateModel tilted_symmetric(TestFunction H, double a_N) {
        return {ModelKind::symmetric, std::move(H), a_N};
    }
    static RateModel tilted_asymmetric(TestFunction H, double a_N) {
        return {ModelKind::asymmetric, std::move(H), a_N};
    }

    bool tilted() const { return tilt.has_value(); }
    int speed_exponent() const { return base == ModelKind::symmetric ? 2 : 1; }
};

/// Bond rate including the tilt factor, with macroscopic coordinates
/// u = (x - center_site) / N. With H = 0 this is the base rate.
double tilted_rate(const RateModel& model, const Configuration& config, std::int64_t x, double t,
                   std::int64_t N, std::int64_t center_site);

class SimulationEngine;

/// Per-replica observer. The state is piecewise constant: on_interval covers
/// [t0, t1) with the current configuration, on_sample fires strictly inside
/// intervals with the pre-event state, on_event fires after the swap.
class Observer {
  public:
    virtual ~Observer() = default;
    virtual void on_start(const SimulationEngine&) {}
    virtual void on_interval(double /*t0*/, double /*t1*/, const SimulationEngine&) {}
    virtual void on_event(double /*t*/, std::int64_t /*bond*/, const SimulationEngine&) {}
    virtual void on_sample(double /*t*/, const SimulationEngine&) {}
    virtual void on_finish(const SimulationEngine&) {}
};

struct SimOptions {
    enum class Selector { fenwick, linear_scan };
    enum class TiltMethod { direct, thinning };

    Selector selector = Selector::fenwick;
    TiltMethod tilt_method = TiltMethod::direct;
    std::vector<double> sample_times;
    bool record_events = false;
    std::int64_t max_events = 0;  // 0 = no cap
    std::int64_t rate_refresh_interval = 1000000;
    std::int64_t ergodic_check_interval = 100000;
    std::int64_t thinning_windows = 1024;
    double rate_drift_tol = 1e-9;
};

struct EventRecord {
    double time;
    std::int64_t bond;
};

/// Outcome of one replica run; observer outputs live in the observers.
struct RunResult {
    Configuration final_config{1};
    std::uint64_t events = 0;
    double total_time = 0.0;
    std::uint64_t proposals = 0;   // thinning proposals (== events for direct)
    std::uint64_t rejections = 0;  // thinning rejections
    std::vector<EventRecord> event_log;
};

/// Recorded trajectory for replay-based computations.
struct EventTrace {
    Configuration initial{1};
    double horizon = 0.0;
    std::vector<EventRecord> jumps;
};

class SimulationEngine {
  public:
    SimulationEngine(const Configuration& initial, const RateModel& model, std::int64_t N, double T,
                     const SimOptions& opts, Rng& rng);

    void run(std::span<Observer* const> observers);

    const Configuration& config() const { return config_; }
    double time() const { return t_; }
    double horizon() const { return T_; }
    std::int64_t L() const { return L_; }
    std::int64_t N() const { return N_; }
    std::int64_t center_site() const { return center_; }
    double coord(std::int64_t x) const { return static_cast<double>(x - center_) / static_cast<double>(N_); }
    const RateModel& model() const { return model_; }
    std::uint64_t events() const { return events_; }
    double total_rate() const { return fenwick_.total(); }
    double speed_factor() const;
    double bond_rate(std::int64_t x) const { return rates_[static_cast<std::size_t>(x)]; }
    RunResult take_result();

    /// Replay support: apply one recorded swap (rates are not maintained).
    void apply_replay_event(std::int64_t bond) {
        config_.swap_bond(bond);
        ++events_;
    }

  private:
    double exact_bond_rate(std::int64_t x, double t) const;
    double envelope_bond_rate(std::int64_t x) const;
    void refresh_all_rates(double t, bool check_drift);
    void update_bonds_around(std::int64_t bond, double t);
    void rebuild_tilt_tables(double psi_lo, double psi_hi);

    Configuration config_;
    RateModel model_;
    std::int64_t N_, L_, center_;
    double T_;
    SimOptions opts_;
    Rng& rng_;

    std::vector<double> rates_;  // current per-bond rates (envelope rates when thinning)
    FenwickTree fenwick_;
    std::vector<double> tilt_up_, tilt_down_;  // per-bond tilt factors (see .cpp)
    bool thinning_ = false;
    double window_len_ = 0.0;
    double psi_ref_lo_ = 1.0, psi_ref_hi_ = 1.0;

    double t_ = 0.0;
    std::uint64_t events_ = 0, proposals_ = 0, rejections_ = 0;
    std::vector<EventRecord> event_log_;
};

/// Run the continuous-time chain up to horizon T with waiting times drawn by
/// inverse CDF at rate N^speed * (total bond rate).
RunResult simulate(const Configuration& initial, const RateModel& model, std::int64_t N, double T,
                   std::span<Observer* const> observers, Rng& rng, const SimOptions& opts = {});

/// Replay a recorded trace through observers (same notification order).
void replay(const EventTrace& trace, const RateModel& model, std::int64_t N,
            std::span<Observer* const> observers, const SimOptions& opts);

}  // namespace fep
