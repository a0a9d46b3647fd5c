#include "fep/harness.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "fep/dynamics.hpp"
#include "fep/hydro.hpp"
#include "fep/measures.hpp"
#include "fep/observables.hpp"
#include "fep/stats.hpp"

namespace fep {

namespace {

std::atomic<bool> g_interrupted{false};

void handle_sigint(int) { g_interrupted.store(true); }

void maybe_set_threads(const ExperimentConfig& cfg) {
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

}  // namespace

void install_interrupt_handler() { std::signal(SIGINT, handle_sigint); }
bool interrupted() { return g_interrupted.load(); }

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "stationarity") return ExperimentKind::stationarity;
    if (name == "clt") return ExperimentKind::clt;
    if (name == "hydro") return ExperimentKind::hydro;
    if (name == "bg") return ExperimentKind::bg;
    if (name == "entropy") return ExperimentKind::entropy;
    if (name == "ensembles") return ExperimentKind::ensembles;
    if (name == "martingale") return ExperimentKind::martingale;
    if (name == "transport") return ExperimentKind::transport;
    if (name == "rate") return ExperimentKind::rate;
    throw ConfigInvalid("unknown experiment kind: " + name);
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::stationarity: return "stationarity";
        case ExperimentKind::clt: return "clt";
        case ExperimentKind::hydro: return "hydro";
        case ExperimentKind::bg: return "bg";
        case ExperimentKind::entropy: return "entropy";
        case ExperimentKind::ensembles: return "ensembles";
        case ExperimentKind::martingale: return "martingale";
        case ExperimentKind::transport: return "transport";
        case ExperimentKind::rate: return "rate";
    }
    return "?";
}

double ExperimentConfig::a_N() const { return std::pow(static_cast<double>(N), gamma); }

TestFunction ExperimentConfig::test_function() const {
    TestFunction f = tf_profile == "gaussian" ? TestFunction::gaussian(tf_amplitude, tf_center, tf_width)
                     : tf_profile == "sine_bump"
                         ? TestFunction::sine_bump(tf_amplitude, tf_center, tf_width)
                         : TestFunction::bump(tf_amplitude, tf_center, tf_width);
    return tf_normalize ? f.normalized_l2() : f;
}

std::int64_t ExperimentConfig::support_sites(const TestFunction& H) const {
    return 2 * (static_cast<std::int64_t>(std::ceil(H.support_radius() * static_cast<double>(N))) + 2) + 1;
}

std::int64_t ExperimentConfig::derived_L(const TestFunction& H, double extra_u) const {
    std::int64_t supp = support_sites(H);
    std::int64_t span = supp + 2 * static_cast<std::int64_t>(std::ceil(extra_u * static_cast<double>(N)));
    std::int64_t need = std::max(2 * supp, span + 512);
    if (L > 0) {
        if (L < need)
            throw ConfigInvalid("L=" + std::to_string(L) + " smaller than the required ring size " +
                                std::to_string(need));
        return L;
    }
    return ((need + 63) / 64) * 64;
}

ExperimentConfig ExperimentConfig::from_toml(const toml::Table& t) {
    ExperimentConfig cfg;
    cfg.kind = experiment_kind_from_string(t.get_string("kind"));
    cfg.rho = t.get_float("rho", 0.75);
    cfg.N = t.get_int("N", 1000);
    cfg.gamma = t.get_float("gamma", 0.75);
    cfg.L = t.get_int("L", 0);
    cfg.T = t.get_float("T", 0.1);
    cfg.replicas = t.get_int("replicas", 1);
    cfg.seed = static_cast<std::uint64_t>(t.get_int("seed", 1));
    cfg.out_dir = t.get_string("out", std::string{});
    cfg.threads = static_cast<int>(t.get_int("threads", 0));
    cfg.tf_profile = t.get_string("test_function.profile", std::string("bump"));
    cfg.tf_center = t.get_float("test_function.center", 0.0);
    cfg.tf_width = t.get_float("test_function.width", 1.0);
    cfg.tf_amplitude = t.get_float("test_function.amplitude", 1.0);
    cfg.tf_normalize = t.get_bool("test_function.normalize", false);
    std::string model = t.get_string("model", std::string("symmetric"));
    if (model != "symmetric" && model != "asymmetric")
        throw ConfigInvalid("model must be symmetric or asymmetric");
    cfg.model = model == "symmetric" ? ModelKind::symmetric : ModelKind::asymmetric;
    cfg.k = t.get_int("k", 7);
    cfg.events = t.get_int("events", 1000000);
    cfg.state_samples = t.get_int("state_samples", 5000);
    cfg.samples = t.get_int("samples", 10000);
    cfg.ell_list = t.get_int_array("ell_list", {32, 64, 128, 256, 512});
    cfg.ens_samples = t.get_int("ens_samples", 20000);
    cfg.n_list = t.get_int_array("N_list", {});
    cfg.block_sites = t.get_int("block_sites", 0);
    cfg.transport_time = t.get_float("transport_time", 0.5);
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (!(rho > 0.5 && rho < 1.0)) throw ConfigInvalid("rho must lie in (1/2, 1)");
    if (!(gamma >= 0.5 && gamma < 1.0))
        throw ConfigInvalid("gamma must lie in [1/2, 1); a_N = N^gamma");
    if (gamma == 0.5 && kind != ExperimentKind::clt)
        std::cerr << "warning: gamma = 1/2 sits at the edge of the moderate scaling sqrt(N) << a_N\n";
    if (N < 1) throw ConfigInvalid("N must be positive");
    if (replicas < 1) throw ConfigInvalid("replicas must be >= 1");
    if (T <= 0.0) throw ConfigInvalid("T must be positive");
    if (tf_width <= 0.0) throw ConfigInvalid("test_function.width must be positive");
    if (tf_profile != "bump" && tf_profile != "gaussian" && tf_profile != "sine_bump")
        throw ConfigInvalid("test_function.profile must be bump, gaussian, or sine_bump");
    if (kind == ExperimentKind::transport || (kind == ExperimentKind::bg && model == ModelKind::asymmetric)) {
        double n = static_cast<double>(N);
        double needed = std::sqrt(n) * std::pow(std::log(n), 2.0);
        if (a_N() < needed)
            std::cerr << "warning: asymmetric scaling wants a_N >> sqrt(N) (log N)^2 = "
                      << needed << ", got a_N = " << a_N() << "\n";
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << format_double(row[i]);
        }
        out << "\n";
    }
}

void write_summary_json(const std::string& path, const ExperimentResult& result,
                        const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["kind"] = result.kind;
    j["config"] = {{"rho", cfg.rho},         {"N", cfg.N},       {"gamma", cfg.gamma},
                   {"L", cfg.L},             {"T", cfg.T},       {"replicas", cfg.replicas},
                   {"seed", cfg.seed},       {"model", cfg.model == ModelKind::symmetric ? "symmetric" : "asymmetric"}};
    j["interrupted"] = result.interrupted;
    j["pass"] = result.all_pass();
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : result.checks) {
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"value", c.value},
                          {"target", c.target},
                          {"tolerance", c.tolerance},
                          {"detail", c.detail}});
    }
    j["checks"] = checks;
    j["metrics"] = result.metrics;
    std::vector<std::string> series_names;
    for (const auto& f : result.series_files)
        series_names.push_back(std::filesystem::path(f).filename().string());
    j["series"] = series_names;
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// stationarity: small-ring occupancy vs the exact generator null space
// ---------------------------------------------------------------------------

ExperimentResult run_stationarity(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "stationarity";
    int L = static_cast<int>(cfg.L > 0 ? cfg.L : 10);
    int k = static_cast<int>(cfg.k);
    GeneratorMatrix gen = build_generator(L, k, cfg.model);
    Eigen::VectorXd pi = stationary_distribution(gen);

    Configuration init = gen.state_config(0);
    RateModel model = cfg.model == ModelKind::symmetric ? RateModel::symmetric() : RateModel::asymmetric();

    // pilot run to convert the event budget into a time horizon
    Rng pilot_rng = replica_stream(cfg.seed, 0);
    SimOptions pilot_opts;
    pilot_opts.max_events = std::min<std::int64_t>(cfg.events / 10, 20000);
    RunResult pilot = simulate(init, model, 1, 1e12, {}, pilot_rng, pilot_opts);
    double rate = static_cast<double>(pilot.events) / pilot.total_time;
    double horizon = static_cast<double>(cfg.events) / rate;

    SimOptions opts;
    double burn = 0.1 * horizon;
    for (std::int64_t i = 0; i < cfg.state_samples; ++i)
        opts.sample_times.push_back(burn + (horizon - burn) * (static_cast<double>(i) + 0.5) /
                                               static_cast<double>(cfg.state_samples));
    StateFreqObserver freq(gen);
    Observer* obs[] = {&freq};
    Rng rng = replica_stream(cfg.seed, 1);
    RunResult run_res = simulate(init, model, 1, horizon, obs, rng, opts);

    double chi2 = 0.0;
    std::int64_t total = 0;
    for (auto c : freq.counts()) total += c;
    for (std::size_t i = 0; i < freq.counts().size(); ++i) {
        double expected = pi(static_cast<int>(i)) * static_cast<double>(total);
        double diff = static_cast<double>(freq.counts()[i]) - expected;
        chi2 += diff * diff / expected;
    }
    int dof = static_cast<int>(freq.counts().size()) - 1;
    double p = chi_square_tail(chi2, dof);

    res.metrics["states"] = static_cast<double>(gen.states.size());
    res.metrics["events"] = static_cast<double>(run_res.events);
    res.metrics["chi2"] = chi2;
    res.metrics["dof"] = dof;
    res.metrics["p_value"] = p;
    res.checks.push_back({"chi_square_p_above_0.001", p > 0.001, p, 0.001, 0.0,
                          "chi2=" + format_double(chi2) + " dof=" + std::to_string(dof)});

    if (!cfg.out_dir.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < freq.counts().size(); ++i)
            rows.push_back({static_cast<double>(i), static_cast<double>(freq.counts()[i]),
                            pi(static_cast<int>(i)) * static_cast<double>(total)});
        std::string f = join_path(cfg.out_dir, "state_counts.csv");
        write_csv(f, "state,observed,expected", rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// clt: static field variance vs B(rho) ||H||^2
// ---------------------------------------------------------------------------

ExperimentResult run_clt(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "clt";
    TestFunction H = cfg.test_function();
    double a_N = cfg.a_N();
    GrandCanonical gc(cfg.rho);
    std::int64_t len = cfg.support_sites(H);
    std::int64_t center = len / 2;

    std::vector<double> values(static_cast<std::size_t>(cfg.samples), 0.0);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < cfg.samples; ++i) {
        if (interrupted()) continue;
        Rng rng = replica_stream(cfg.seed, static_cast<std::uint64_t>(i));
        Configuration c = sample_gc_segment(gc, len, rng);
        values[static_cast<std::size_t>(i)] = field_serial(c, H, cfg.rho, a_N, cfg.N, 0.0, center).value;
    }
    res.interrupted = interrupted();

    Summary s = summarize(values);
    double scale = a_N * a_N / static_cast<double>(cfg.N);
    double target = coeff_B(cfg.rho) * H.l2_sq() / scale;
    double rel = std::abs(s.variance - target) / target;
    res.metrics["variance"] = s.variance;
    res.metrics["target"] = target;
    res.metrics["rel_error"] = rel;
    res.metrics["var_se"] = s.variance * std::sqrt(2.0 / static_cast<double>(s.n - 1));
    res.checks.push_back({"field_variance_within_5pct", rel <= 0.05, s.variance, target, 0.05 * target,
                          "rel_error=" + format_double(rel)});

    if (!cfg.out_dir.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < values.size(); ++i)
            rows.push_back({static_cast<double>(i), values[i]});
        std::string f = join_path(cfg.out_dir, "field_samples.csv");
        write_csv(f, "replica,value", rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// martingale: sample mean of M^N_T(H) vs 1
// ---------------------------------------------------------------------------

ExperimentResult run_martingale(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "martingale";
    TestFunction H = cfg.test_function();
    double a_N = cfg.a_N();
    std::int64_t L = cfg.derived_L(H);
    GrandCanonical gc(cfg.rho);
    RateModel model = cfg.model == ModelKind::symmetric ? RateModel::symmetric() : RateModel::asymmetric();

    std::vector<double> m_final(static_cast<std::size_t>(cfg.replicas), 0.0);
    std::vector<double> logm_final(static_cast<std::size_t>(cfg.replicas), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
        if (interrupted()) continue;
        Rng rng = replica_stream(cfg.seed, static_cast<std::uint64_t>(r));
        Configuration init = sample_gc_ring(gc, L, rng);
        MartingaleObserver mart(H, cfg.rho, a_N);
        Observer* obs[] = {&mart};
        SimOptions opts;
        opts.sample_times = {cfg.T};
        simulate(init, model, cfg.N, cfg.T, obs, rng, opts);
        logm_final[static_cast<std::size_t>(r)] = mart.log().log_m.back();
        m_final[static_cast<std::size_t>(r)] = std::exp(mart.log().log_m.back());
    }
    res.interrupted = interrupted();

    Summary s = summarize(m_final);
    Summary slog = summarize(logm_final);
    double dev = std::abs(s.mean - 1.0);
    res.metrics["mean_M"] = s.mean;
    res.metrics["se_M"] = s.std_error;
    res.metrics["mean_logM"] = slog.mean;
    res.metrics["var_logM"] = slog.variance;
    res.checks.push_back({"mean_one_within_3se", dev <= 3.0 * s.std_error, s.mean, 1.0,
                          3.0 * s.std_error, "se=" + format_double(s.std_error)});

    if (!cfg.out_dir.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < m_final.size(); ++i)
            rows.push_back({static_cast<double>(i), cfg.T, logm_final[i]});
        std::string f = join_path(cfg.out_dir, "martingale.csv");
        write_csv(f, "replica,t,logM", rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// hydro: tilted dynamics profile vs the forced heat equation
// ---------------------------------------------------------------------------

ExperimentResult run_hydro_experiment(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "hydro";
    TestFunction H = cfg.test_function();
    double a_N = cfg.a_N();
    double D = coeff_h_tilde_prime(cfg.rho);
    double w_profile = H.support_radius() + std::abs(H.center()) + 2.0 * std::sqrt(D * cfg.T) + 0.1;
    std::int64_t L = cfg.derived_L(H, w_profile - H.support_radius());
    std::int64_t block = cfg.block_sites > 0 ? cfg.block_sites
                                             : std::max<std::int64_t>(32, 192 * cfg.N / 1000);
    std::vector<double> checkpoints = {cfg.T / 4.0, cfg.T / 2.0, cfg.T};
    GrandCanonical gc(cfg.rho);
    RateModel model = RateModel::tilted_symmetric(H, a_N);

    std::vector<std::vector<std::vector<double>>> profiles(static_cast<std::size_t>(cfg.replicas));
    std::vector<double> centers;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
        if (interrupted()) continue;
        Rng rng = replica_stream(cfg.seed, static_cast<std::uint64_t>(r));
        Configuration init = sample_gc_ring(gc, L, rng);
        BlockProfileObserver prof(cfg.rho, a_N, -w_profile, w_profile, block);
        Observer* obs[] = {&prof};
        SimOptions opts;
        opts.sample_times = checkpoints;
        simulate(init, model, cfg.N, cfg.T, obs, rng, opts);
        profiles[static_cast<std::size_t>(r)] = prof.profiles();
#pragma omp critical
        if (centers.empty()) centers = prof.centers();
    }
    res.interrupted = interrupted();

    double r_dom = w_profile + 4.0 * std::sqrt(D * cfg.T) + 0.5;
    Grid1D grid{-r_dom, r_dom, 4096, cfg.T, 1024};
    MacroscopicPath pde = solve_heat_forced(std::nullopt, H, cfg.rho, grid);

    // PDE profile averaged over exactly the simulated site blocks, so the
    // comparison carries no smoothing bias
    auto pde_block = [&](int it, double center_u) {
        double n = static_cast<double>(cfg.N);
        double acc = 0.0;
        for (std::int64_t s = 0; s < block; ++s) {
            double u = center_u + (static_cast<double>(s) - 0.5 * static_cast<double>(block - 1)) / n;
            double x = (u - grid.u_min) / grid.du();
            int j = std::clamp(static_cast<int>(x), 0, grid.nu - 1);
            double frac = x - j;
            acc += (1.0 - frac) * pde.at(it, j) + frac * pde.at(it, j + 1);
        }
        return acc / static_cast<double>(block);
    };

    std::size_t nb = centers.size();
    std::vector<std::vector<double>> csv_rows;
    std::size_t completed = 0;
    for (const auto& p : profiles)
        if (!p.empty()) ++completed;
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        std::vector<double> mean(nb, 0.0), var(nb, 0.0);
        for (const auto& rep : profiles) {
            if (rep.empty()) continue;
            for (std::size_t b = 0; b < nb; ++b) mean[b] += rep[ci][b];
        }
        for (auto& m : mean) m /= static_cast<double>(completed);
        for (const auto& rep : profiles) {
            if (rep.empty()) continue;
            for (std::size_t b = 0; b < nb; ++b) {
                double d = rep[ci][b] - mean[b];
                var[b] += d * d;
            }
        }
        for (auto& v : var) v /= static_cast<double>(completed - 1);

        int it = static_cast<int>(std::lround(checkpoints[ci] / grid.dt()));
        double num = 0.0, den = 0.0, noise = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            double alpha = pde_block(it, centers[b]);
            num += (mean[b] - alpha) * (mean[b] - alpha);
            den += alpha * alpha;
            noise += var[b] / static_cast<double>(completed);
            csv_rows.push_back({checkpoints[ci], centers[b], mean[b], alpha,
                                std::sqrt(var[b] / static_cast<double>(completed))});
        }
        double discrepancy = std::sqrt(num / den);
        double noise_rel = std::sqrt(noise / den);
        // E ||mean - alpha||^2 = ||bias||^2 + total noise variance; subtract
        // the known noise floor before comparing to the 10% target
        double debiased = std::sqrt(std::max(num / den - noise / den, 0.0));
        bool pass = debiased <= 0.10;
        std::string tag = "checkpoint_t=" + format_double(checkpoints[ci]);
        res.metrics["discrepancy_" + std::to_string(ci)] = discrepancy;
        res.metrics["noise_rel_" + std::to_string(ci)] = noise_rel;
        res.metrics["debiased_" + std::to_string(ci)] = debiased;
        res.checks.push_back({"l2_discrepancy_" + tag, pass, discrepancy, 0.10, noise_rel,
                              "debiased=" + format_double(debiased)});
    }

    if (!cfg.out_dir.empty()) {
        std::string f = join_path(cfg.out_dir, "hydro_profiles.csv");
        write_csv(f, "t,u,simulated,pde,stderr", csv_rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// transport: correlation of mu_t(H) with mu_0(H(. + A' t))
// ---------------------------------------------------------------------------

ExperimentResult run_transport_experiment(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "transport";
    TestFunction H = cfg.test_function();
    double a_N = cfg.a_N();
    double a_prime = coeff_A_prime(cfg.rho);
    double t_star = cfg.transport_time;
    TestFunction H_shift = H.translated(-a_prime * t_star);
    std::int64_t L = cfg.derived_L(H, std::abs(a_prime) * t_star + 0.1);
    GrandCanonical gc(cfg.rho);
    RateModel model = RateModel::asymmetric();

    std::vector<double> f0(static_cast<std::size_t>(cfg.replicas), 0.0);
    std::vector<double> ft(static_cast<std::size_t>(cfg.replicas), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
        if (interrupted()) continue;
        Rng rng = replica_stream(cfg.seed, static_cast<std::uint64_t>(r));
        Configuration init = sample_gc_ring(gc, L, rng);
        f0[static_cast<std::size_t>(r)] =
            field_serial(init, H_shift, cfg.rho, a_N, cfg.N, 0.0, L / 2).value;
        FieldObserver fobs(H, cfg.rho, a_N);
        Observer* obs[] = {&fobs};
        SimOptions opts;
        opts.sample_times = {t_star};
        simulate(init, model, cfg.N, t_star, obs, rng, opts);
        ft[static_cast<std::size_t>(r)] = fobs.samples().back().value;
    }
    res.interrupted = interrupted();

    double corr = pearson_correlation(ft, f0);
    res.metrics["correlation"] = corr;
    res.metrics["A_prime"] = a_prime;
    res.checks.push_back({"transport_correlation_above_0.9", corr >= 0.9, corr, 0.9, 0.0,
                          "A'(rho)=" + format_double(a_prime)});

    if (!cfg.out_dir.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < f0.size(); ++i)
            rows.push_back({static_cast<double>(i), f0[i], ft[i]});
        std::string f = join_path(cfg.out_dir, "transport_fields.csv");
        write_csv(f, "replica,field0_shifted,field_t", rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// entropy: exact relative-entropy sum vs the quadratic limit
// ---------------------------------------------------------------------------

ExperimentResult run_entropy(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "entropy";
    TestFunction phi = cfg.test_function();
    std::vector<std::int64_t> n_list = cfg.n_list;
    if (n_list.empty()) n_list = {10000, 100000, cfg.N};
    double target = phi.l2_sq() / (2.0 * coeff_B(cfg.rho));

    std::vector<std::vector<double>> rows;
    double final_value = 0.0;
    for (std::int64_t n : n_list) {
        double a_n = std::pow(static_cast<double>(n), cfg.gamma);
        PerturbedMeasure pm(cfg.rho, phi, a_n, n);
        double h = relative_entropy_perturbed(pm);
        double scaled = h * static_cast<double>(n) / (a_n * a_n);
        rows.push_back({static_cast<double>(n), h, scaled});
        final_value = scaled;
        res.metrics["scaled_entropy_N=" + std::to_string(n)] = scaled;
    }
    double rel = std::abs(final_value - target) / target;
    res.metrics["target"] = target;
    res.metrics["rel_error"] = rel;
    res.checks.push_back({"entropy_limit_within_2pct", rel <= 0.02, final_value, target, 0.02 * target,
                          "rel_error=" + format_double(rel)});

    if (!cfg.out_dir.empty()) {
        std::string f = join_path(cfg.out_dir, "entropy.csv");
        write_csv(f, "N,entropy,scaled", rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// ensembles: canonical block averages vs grand-canonical values
// ---------------------------------------------------------------------------

ExperimentResult run_ensembles(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "ensembles";
    LocalFunction g = LocalFunction::gradient_h();
    GrandCanonical gc(cfg.rho);

    std::vector<double> consts;
    std::vector<std::vector<double>> rows;
    for (std::size_t li = 0; li < cfg.ell_list.size(); ++li) {
        std::int64_t ell = cfg.ell_list[li];
        std::int64_t m = 2 * ell + 1;
        std::int64_t kk = static_cast<std::int64_t>(std::llround(cfg.rho * static_cast<double>(m)));
        CanonicalWindow win{ell, kk, 1, 1};
        CanonicalSampler sampler(win, gc);
        double rho_k = static_cast<double>(kk) / static_cast<double>(m);
        double g_target = coeff_h_tilde(rho_k);
        std::int64_t ell_p = ell - g.s_g();

        std::vector<double> vals(static_cast<std::size_t>(cfg.ens_samples), 0.0);
#pragma omp parallel for schedule(dynamic, 256)
        for (std::int64_t s = 0; s < cfg.ens_samples; ++s) {
            Rng rng = replica_stream(cfg.seed + li, static_cast<std::uint64_t>(s));
            std::vector<int> word = sampler.sample(rng);
            Configuration c(m + 2);
            c.set(0, win.a);
            for (std::int64_t i = 0; i < m; ++i) c.set(i + 1, word[static_cast<std::size_t>(i)]);
            c.set(m + 1, win.b);
            std::int64_t x0 = 1 + ell;  // window center in the padded configuration
            double avg = 0.0;
            for (std::int64_t y = -ell_p; y <= ell_p; ++y) avg += g.eval(c, x0 + y);
            avg /= static_cast<double>(2 * ell_p + 1);
            vals[static_cast<std::size_t>(s)] = std::abs(avg - g_target);
        }
        Summary s = summarize(vals);
        double c_ell = s.mean * static_cast<double>(ell) / std::pow(std::log(static_cast<double>(ell)), 2.0);
        consts.push_back(c_ell);
        rows.push_back({static_cast<double>(ell), s.mean, s.std_error, c_ell});
        res.metrics["C_ell=" + std::to_string(ell)] = c_ell;
    }

    double mean_c = 0.0;
    for (double c : consts) mean_c += c;
    mean_c /= static_cast<double>(consts.size());
    double worst = 0.0;
    for (double c : consts) worst = std::max(worst, std::abs(c - mean_c) / mean_c);
    res.metrics["C_mean"] = mean_c;
    res.metrics["C_max_rel_dev"] = worst;
    res.checks.push_back({"ensemble_constant_stable_25pct", worst <= 0.25, worst, 0.25, 0.0,
                          "C_mean=" + format_double(mean_c)});

    if (!cfg.out_dir.empty()) {
        std::string f = join_path(cfg.out_dir, "ensembles.csv");
        write_csv(f, "ell,mean_abs_dev,se,C", rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// bg: Boltzmann-Gibbs sup-residual trend across N
// ---------------------------------------------------------------------------

ExperimentResult run_bg_experiment(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "bg";
    LocalFunction g = LocalFunction::gradient_h();
    GrandCanonical gc(cfg.rho);
    std::vector<std::int64_t> n_list = cfg.n_list;
    if (n_list.empty()) n_list = {250, 500, 1000, 2000};
    RateModel model = cfg.model == ModelKind::symmetric ? RateModel::symmetric() : RateModel::asymmetric();

    std::vector<std::vector<double>> rows;
    std::vector<double> mean_sups;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        std::int64_t n = n_list[ni];
        ExperimentConfig sub = cfg;
        sub.N = n;
        TestFunction H = cfg.test_function();
        double a_n = std::pow(static_cast<double>(n), cfg.gamma);
        std::int64_t L = sub.derived_L(H);

        std::vector<double> sups(static_cast<std::size_t>(cfg.replicas), 0.0);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t r = 0; r < cfg.replicas; ++r) {
            if (interrupted()) continue;
            Rng rng = replica_stream(cfg.seed + 1000 * ni, static_cast<std::uint64_t>(r));
            Configuration init = sample_gc_ring(gc, L, rng);
            BgObserver bg(g, H, cfg.rho, a_n);
            Observer* obs[] = {&bg};
            SimOptions opts;
            opts.sample_times = {cfg.T};
            simulate(init, model, n, cfg.T, obs, rng, opts);
            sups[static_cast<std::size_t>(r)] = bg.final_sup();
        }
        Summary s = summarize(sups);
        mean_sups.push_back(s.mean);
        rows.push_back({static_cast<double>(n), s.mean, s.std_error});
        res.metrics["sup_residual_N=" + std::to_string(n)] = s.mean;
    }
    res.interrupted = interrupted();

    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < mean_sups.size(); ++i)
        if (mean_sups[i + 1] >= mean_sups[i]) decreasing = false;
    res.checks.push_back({"sup_residual_decreasing_in_N", decreasing,
                          mean_sups.empty() ? 0.0 : mean_sups.back(),
                          mean_sups.empty() ? 0.0 : mean_sups.front(), 0.0,
                          "monotone trend over N list"});

    if (!cfg.out_dir.empty()) {
        std::string f = join_path(cfg.out_dir, "bg_residual.csv");
        write_csv(f, "N,mean_sup,se", rows);
        res.series_files.push_back(f);
    }
    return res;
}

// ---------------------------------------------------------------------------
// rate: variational identities for the quadratic functionals
// ---------------------------------------------------------------------------

ExperimentResult run_rate_experiment(const ExperimentConfig& cfg) {
    maybe_set_threads(cfg);
    ExperimentResult res;
    res.kind = "rate";
    double T = cfg.T;

    std::vector<TestFunction> funcs;
    for (double c : {-0.8, 0.0, 0.8}) {
        funcs.push_back(TestFunction::bump(1.0, c, 0.9));
        funcs.push_back(TestFunction::bump(1.0, c, 0.9).with_time_mod(TestFunction::TimeMod::poly, 1.0 / T));
    }
    RateBasis basis = RateBasis::make(funcs, cfg.rho, T);

    double D = coeff_h_tilde_prime(cfg.rho);
    double r_dom = 0.8 + 0.9 + 4.0 * std::sqrt(D * T) + 0.5;
    Grid1D grid{-r_dom, r_dom, 2048, T, 1024};

    const TestFunction& h0 = basis.funcs[0];
    MacroscopicPath heat = solve_heat_forced(std::nullopt, h0, cfg.rho, grid);
    QuadraticRateResult qd = q_dyn_sym(heat, basis, cfg.rho);
    double target_dyn = basis.gram(0, 0);
    double rel_dyn = std::abs(qd.value - target_dyn) / target_dyn;
    res.metrics["q_dyn"] = qd.value;
    res.metrics["q_dyn_target"] = target_dyn;
    res.checks.push_back({"q_dyn_forced_heat_within_2pct", rel_dyn <= 0.02, qd.value, target_dyn,
                          0.02 * target_dyn, "rel_error=" + format_double(rel_dyn)});

    TestFunction phi = TestFunction::bump(1.0, 0.0, 0.9);
    std::vector<TestFunction> space_basis = {phi, TestFunction::bump(1.0, -0.8, 0.9),
                                             TestFunction::bump(1.0, 0.8, 0.9)};
    MacroscopicPath heat_phi = solve_heat_forced(phi, std::nullopt, cfg.rho, grid);
    QuadraticRateResult qi = q_ini(heat_phi, space_basis, cfg.rho);
    double target_ini = phi.l2_sq() / (2.0 * coeff_B(cfg.rho));
    double rel_ini = std::abs(qi.value - target_ini) / target_ini;
    res.metrics["q_ini"] = qi.value;
    res.metrics["q_ini_target"] = target_ini;
    res.checks.push_back({"q_ini_within_2pct", rel_ini <= 0.02, qi.value, target_ini, 0.02 * target_ini,
                          "rel_error=" + format_double(rel_ini)});

    MacroscopicPath transport = solve_transport(phi, cfg.rho, grid);
    AsymRateCheck zero_check = q_dyn_asym_check(transport, basis, cfg.rho);
    res.metrics["asym_residual_transport"] = zero_check.max_rel_residual;
    res.checks.push_back({"asym_zero_on_transport_path", zero_check.is_zero,
                          zero_check.max_rel_residual, 0.0, 1e-8, "Richardson residual"});

    AsymRateCheck inf_check = q_dyn_asym_check(heat_phi, basis, cfg.rho);
    res.metrics["asym_residual_heat"] = inf_check.max_rel_residual;
    res.checks.push_back({"asym_infinite_on_heat_path", !inf_check.is_zero, inf_check.max_rel_residual,
                          0.0, 1e-8, "linear functional does not vanish"});

    if (!cfg.out_dir.empty()) {
        nlohmann::ordered_json j;
        j["basis_size"] = basis.funcs.size();
        j["q_dyn"] = {{"value", qd.value}, {"target", target_dyn}, {"maximizer", qd.maximizer},
                      {"singular_gram", qd.singular_gram}};
        j["q_ini"] = {{"value", qi.value}, {"target", target_ini}, {"maximizer", qi.maximizer}};
        j["asym_check"] = {{"transport_residual", zero_check.max_rel_residual},
                           {"heat_residual", inf_check.max_rel_residual}};
        std::string f = join_path(cfg.out_dir, "rate.json");
        std::ofstream out(f);
        out << j.dump(2) << "\n";
        res.series_files.push_back(f);
    }
    return res;
}

ExperimentResult run(const ExperimentConfig& cfg) {
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
    ExperimentResult res;
    switch (cfg.kind) {
        case ExperimentKind::stationarity: res = run_stationarity(cfg); break;
        case ExperimentKind::clt: res = run_clt(cfg); break;
        case ExperimentKind::hydro: res = run_hydro_experiment(cfg); break;
        case ExperimentKind::bg: res = run_bg_experiment(cfg); break;
        case ExperimentKind::entropy: res = run_entropy(cfg); break;
        case ExperimentKind::ensembles: res = run_ensembles(cfg); break;
        case ExperimentKind::martingale: res = run_martingale(cfg); break;
        case ExperimentKind::transport: res = run_transport_experiment(cfg); break;
        case ExperimentKind::rate: res = run_rate_experiment(cfg); break;
    }
    if (!cfg.out_dir.empty())
        write_summary_json(join_path(cfg.out_dir, "summary.json"), res, cfg);
    return res;
}

}  // namespace fep
