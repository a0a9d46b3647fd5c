#include <doctest.h>

#include <cmath>

#include "fep/dynamics.hpp"
#include "fep/exact.hpp"
#include "fep/measures.hpp"
#include "fep/observables.hpp"
#include "fep/stats.hpp"

using namespace fep;

namespace {

// time-grid occupancy tally against the exact stationary law
double occupancy_chi2_p(const GeneratorMatrix& gen, const RateModel& model, SimOptions opts,
                        std::int64_t samples, double horizon, Rng& rng, std::int64_t N = 1) {
    double burn = 0.1 * horizon;
    for (std::int64_t i = 0; i < samples; ++i)
        opts.sample_times.push_back(burn + (horizon - burn) * (static_cast<double>(i) + 0.5) /
                                               static_cast<double>(samples));
    StateFreqObserver freq(gen);
    Observer* obs[] = {&freq};
    simulate(gen.state_config(0), model, N, horizon, obs, rng, opts);
    Eigen::VectorXd pi = stationary_distribution(gen);
    double chi2 = 0.0;
    std::int64_t total = 0;
    for (auto c : freq.counts()) total += c;
    for (std::size_t i = 0; i < freq.counts().size(); ++i) {
        double expd = pi(static_cast<int>(i)) * static_cast<double>(total);
        double diff = static_cast<double>(freq.counts()[i]) - expd;
        chi2 += diff * diff / expd;
    }
    return chi_square_tail(chi2, static_cast<int>(freq.counts().size()) - 1);
}

}  // namespace

TEST_CASE("all-ones configuration is frozen") {
    Rng rng(3);
    RunResult r = simulate(Configuration::all_ones(12), RateModel::symmetric(), 1, 1.0, {}, rng, {});
    CHECK(r.events == 0);
    CHECK(r.final_config == Configuration::all_ones(12));
}

TEST_CASE("input validation") {
    Rng rng(3);
    CHECK_THROWS_AS(simulate(Configuration::from_string("110010"), RateModel::symmetric(), 1, 1.0, {}, rng, {}),
                    NonErgodicStart);
    CHECK_THROWS_AS(simulate(Configuration::all_ones(8), RateModel::symmetric(), 1, -1.0, {}, rng, {}),
                    HorizonNonPositive);
}

TEST_CASE("particle count is conserved over many events") {
    GrandCanonical gc(0.75);
    Rng rng(17);
    Configuration init = sample_gc_ring(gc, 256, rng);
    std::int64_t before = init.particle_count();
    SimOptions opts;
    opts.max_events = 200000;
    opts.rate_refresh_interval = 50000;  // exercise the drift check
    opts.ergodic_check_interval = 10000;
    RunResult r = simulate(init, RateModel::symmetric(), 1, 1e9, {}, rng, opts);
    CHECK(r.events == 200000);
    CHECK(r.final_config.particle_count() == before);
    CHECK(is_ergodic(r.final_config));
}

TEST_CASE("fenwick and linear-scan selectors produce identical trajectories") {
    for (auto base : {ModelKind::symmetric, ModelKind::asymmetric}) {
        RateModel model = base == ModelKind::symmetric ? RateModel::symmetric() : RateModel::asymmetric();
        GrandCanonical gc(0.8);
        SimOptions opts_f, opts_l;
        opts_f.record_events = opts_l.record_events = true;
        opts_f.max_events = opts_l.max_events = 20000;
        opts_f.selector = SimOptions::Selector::fenwick;
        opts_l.selector = SimOptions::Selector::linear_scan;
        Rng rng_init(5);
        Configuration init = sample_gc_ring(gc, 64, rng_init);
        Rng rng_f(11), rng_l(11);
        RunResult a = simulate(init, model, 1, 1e9, {}, rng_f, opts_f);
        RunResult b = simulate(init, model, 1, 1e9, {}, rng_l, opts_l);
        REQUIRE(a.event_log.size() == b.event_log.size());
        for (std::size_t i = 0; i < a.event_log.size(); ++i) {
            CHECK(a.event_log[i].bond == b.event_log[i].bond);
            CHECK(a.event_log[i].time == b.event_log[i].time);
        }
        CHECK(a.final_config == b.final_config);
    }
}

TEST_CASE("small-ring occupancy matches the exact stationary law") {
    for (auto kind : {ModelKind::symmetric, ModelKind::asymmetric}) {
        GeneratorMatrix gen = build_generator(10, 7, kind);
        RateModel model = kind == ModelKind::symmetric ? RateModel::symmetric() : RateModel::asymmetric();
        Rng rng(2718);
        SimOptions opts;
        double p = occupancy_chi2_p(gen, model, opts, 4000, 40000.0, rng);
        CHECK(p > 0.001);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("tilted bond rates") {
    double a_N = std::pow(500.0, 0.7);
    std::int64_t N = 500;
    TestFunction H = TestFunction::bump(1.5, 0.0, 1.0);
    RateModel tilted = RateModel::tilted_symmetric(H, a_N);

    // zero tilt reduces to the base rate
    RateModel zero_tilt = RateModel::tilted_symmetric(TestFunction::bump(0.0, 0.0, 1.0), a_N);
    Configuration c = Configuration::from_string("1101101110110111");
    for (std::int64_t x = 0; x < c.size(); ++x) {
        CHECK(tilted_rate(zero_tilt, c, x, 0.0, N, c.size() / 2) ==
              doctest::Approx(static_cast<double>(rate_sym(c, x))).epsilon(1e-15));
        // multiplicative tilt never revives a zero base rate
        if (rate_sym(c, x) == 0) CHECK(tilted_rate(tilted, c, x, 0.0, N, c.size() / 2) == 0.0);
    }

    // direct substitution on a window (1,1,0): rate 1, sign eta_{x+1}-eta_x = -1
    std::int64_t x0 = 1;
    Configuration w = Configuration::from_string("11011011");
    REQUIRE(rate_sym(w, x0) == 1);
    double u0 = static_cast<double>(x0 - w.size() / 2) / static_cast<double>(N);
    double u1 = static_cast<double>(x0 + 1 - w.size() / 2) / static_cast<double>(N);
    double delta = H.value(u0) - H.value(u1);
    double expected = std::exp(-(a_N / static_cast<double>(N)) * delta);
    CHECK(tilted_rate(tilted, w, x0, 0.0, N, w.size() / 2) == doctest::Approx(expected).epsilon(1e-14));

    // asymmetric tilt carries no occupancy sign
    RateModel tilted_a = RateModel::tilted_asymmetric(H, a_N);
    REQUIRE(rate_asym(w, x0) == 1);
    double expected_a = std::exp((a_N / static_cast<double>(N)) * (H.value(u1) - H.value(u0)));
    CHECK(tilted_rate(tilted_a, w, x0, 0.0, N, w.size() / 2) == doctest::Approx(expected_a).epsilon(1e-14));
}

TEST_CASE("tilted stationary occupancy: direct and thinning methods agree with the exact law") {
    // constant-in-time tilt on a small ring; the tilted generator is exact
    std::int64_t L = 12;
    std::int64_t N = 12;
    double a_N = 3.0;
    TestFunction H = TestFunction::sine_bump(2.0, 0.0, 0.45);
    RateModel model = RateModel::tilted_symmetric(H, a_N);
    GeneratorMatrix gen = build_generator(static_cast<int>(L), 8, [&](const Configuration& c, std::int64_t x) {
        return tilted_rate(model, c, x, 0.0, N, L / 2);
    });

    for (auto method : {SimOptions::TiltMethod::direct, SimOptions::TiltMethod::thinning}) {
        SimOptions opts;
        opts.tilt_method = method;
        Rng rng(method == SimOptions::TiltMethod::direct ? 41 : 42);
        double p = occupancy_chi2_p(gen, model, opts, 4000, 400.0, rng, N);
        CHECK(p > 0.001);
    }
}

TEST_CASE("waiting times scale with the speed factor") {
    GrandCanonical gc(0.75);
    std::vector<double> mean_dt(2, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
        std::int64_t N = pass == 0 ? 100 : 200;
        Rng rng(777);
        Configuration init = sample_gc_ring(gc, 128, rng);
        SimOptions opts;
        opts.max_events = 40000;
        RunResult r = simulate(init, RateModel::symmetric(), N, 1e9, {}, rng, opts);
        mean_dt[static_cast<std::size_t>(pass)] = r.total_time / static_cast<double>(r.events);
    }
    // doubling N quarters the macroscopic time per event (same ring, same seed)
    CHECK(mean_dt[0] / mean_dt[1] == doctest::Approx(4.0).epsilon(0.05));

    for (int pass = 0; pass < 2; ++pass) {
        std::int64_t N = pass == 0 ? 100 : 200;
        Rng rng(778);
        Configuration init = sample_gc_ring(gc, 128, rng);
        SimOptions opts;
        opts.max_events = 40000;
        RunResult r = simulate(init, RateModel::asymmetric(), N, 1e9, {}, rng, opts);
        mean_dt[static_cast<std::size_t>(pass)] = r.total_time / static_cast<double>(r.events);
    }
    CHECK(mean_dt[0] / mean_dt[1] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("stationarity of the sampled measure under both dynamics") {
    // one- and two-site statistics at time t match their t=0 values
    GrandCanonical gc(0.75);
    const std::int64_t L = 4096;
    const int reps = 60;
    for (auto base : {ModelKind::symmetric, ModelKind::asymmetric}) {
        RateModel model = base == ModelKind::symmetric ? RateModel::symmetric() : RateModel::asymmetric();
        double occ0 = 0.0, occT = 0.0, pair0 = 0.0, pairT = 0.0;
        for (int r = 0; r < reps; ++r) {
            Rng rng(9000 + static_cast<std::uint64_t>(r) + (base == ModelKind::asymmetric ? 500 : 0));
            Configuration init = sample_gc_ring(gc, L, rng);
            occ0 += static_cast<double>(init.particle_count()) / static_cast<double>(L);
            for (std::int64_t x = 0; x < L; ++x) pair0 += init.get(x) * init.get(x + 1);
            RunResult res = simulate(init, model, 64, 0.05, {}, rng, {});
            occT += static_cast<double>(res.final_config.particle_count()) / static_cast<double>(L);
            for (std::int64_t x = 0; x < L; ++x) pairT += res.final_config.get(x) * res.final_config.get(x + 1);
        }
        occ0 /= reps;
        occT /= reps;
        pair0 /= reps * static_cast<double>(L);
        pairT /= reps * static_cast<double>(L);
        CHECK(occT == doctest::Approx(occ0).epsilon(1e-12));  // conserved pathwise
        CHECK(std::abs(pairT - pair0) < 0.004);               // 11-pair density fluctuates only
        CHECK(std::abs(pairT - (2 * 0.75 - 1)) < 0.004);
    }
}

TEST_CASE("event cap and event log") {
    GrandCanonical gc(0.75);
    Rng rng(12);
    Configuration init = sample_gc_ring(gc, 64, rng);
    SimOptions opts;
    opts.max_events = 500;
    opts.record_events = true;
    RunResult r = simulate(init, RateModel::symmetric(), 1, 1e9, {}, rng, opts);
    CHECK(r.events == 500);
    CHECK(r.event_log.size() == 500);
    double prev = 0.0;
    for (const auto& ev : r.event_log) {
        CHECK(ev.time > prev);
        prev = ev.time;
        CHECK(ev.bond >= 0);
        CHECK(ev.bond < 64);
    }
}
