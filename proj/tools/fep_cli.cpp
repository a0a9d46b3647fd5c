#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fep/dynamics.hpp"
#include "fep/harness.hpp"
#include "fep/hydro.hpp"
#include "fep/measures.hpp"
#include "fep/observables.hpp"
#include "fep/stats.hpp"

namespace {

struct TfOpts {
    std::string profile = "bump";
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;
    bool normalize = false;
};

void add_tf_options(CLI::App* cmd, TfOpts& tf) {
    cmd->add_option("--profile", tf.profile, "test function profile: bump|gaussian|sine_bump");
    cmd->add_option("--center", tf.center, "profile center (macroscopic u)");
    cmd->add_option("--width", tf.width, "support radius (bump/sine) or sigma (gaussian)");
    cmd->add_option("--amplitude", tf.amplitude, "profile amplitude");
    cmd->add_flag("--normalize", tf.normalize, "rescale to unit L2 norm");
}

fep::TestFunction make_tf(const TfOpts& tf) {
    fep::TestFunction f = tf.profile == "gaussian"
                              ? fep::TestFunction::gaussian(tf.amplitude, tf.center, tf.width)
                          : tf.profile == "sine_bump"
                              ? fep::TestFunction::sine_bump(tf.amplitude, tf.center, tf.width)
                              : fep::TestFunction::bump(tf.amplitude, tf.center, tf.width);
    return tf.normalize ? f.normalized_l2() : f;
}

int report(const fep::ExperimentResult& res) {
    for (const auto& c : res.checks)
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  value=" << fep::format_double(c.value)
                  << " target=" << fep::format_double(c.target) << "  " << c.detail << "\n";
    return res.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"facilitated exclusion process simulation laboratory"};
    app.require_subcommand(1);
    fep::install_interrupt_handler();

    std::uint64_t seed = 1;
    std::string out_dir;
    int threads = 0;
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (0 = OpenMP default)");

    // --- sample ---
    auto* sample = app.add_subcommand("sample", "draw configurations from a measure");
    std::string measure = "gc";
    double rho = 0.75;
    std::int64_t length = 64, count = 1, ell = 4, kpart = -1;
    int bnd_a = 1, bnd_b = 1;
    double gamma = 0.75;
    std::int64_t bigN = 100000;
    std::string format = "text";
    std::int64_t pmf_len = 0;
    TfOpts sample_tf;
    sample->add_option("--measure", measure, "gc|canonical|perturbed");
    sample->add_option("--rho", rho, "density in (1/2,1)");
    sample->add_option("--length", length, "segment length");
    sample->add_option("--count", count, "number of samples");
    sample->add_option("--ell", ell, "canonical window half-width");
    sample->add_option("--k", kpart, "canonical particle count (default: round(rho*(2l+1)))");
    sample->add_option("--boundary-a", bnd_a, "left boundary occupancy");
    sample->add_option("--boundary-b", bnd_b, "right boundary occupancy");
    sample->add_option("--gamma", gamma, "a_N = N^gamma (perturbed)");
    sample->add_option("--N", bigN, "lattice scale (perturbed)");
    sample->add_option("--format", format, "text|rle|binary");
    sample->add_option("--pmf-table", pmf_len, "export exact segment pmf table for words of this length");
    add_tf_options(sample, sample_tf);

    // --- simulate ---
    auto* simulate_cmd = app.add_subcommand("simulate", "run the event-driven dynamics");
    std::string model_name = "symmetric";
    double sim_T = 0.1;
    std::int64_t sim_N = 500, sim_L = 0;
    double tilt_gamma = 0.0;
    std::int64_t field_points = 32;
    std::string trace_file;
    TfOpts sim_tf;
    simulate_cmd->add_option("--model", model_name, "symmetric|asymmetric");
    simulate_cmd->add_option("--rho", rho, "density");
    simulate_cmd->add_option("--N", sim_N, "scaling parameter");
    simulate_cmd->add_option("--L", sim_L, "ring size (0 = auto)");
    simulate_cmd->add_option("--T", sim_T, "time horizon");
    simulate_cmd->add_option("--tilt-gamma", tilt_gamma, "tilt with a_N = N^gamma (0 = untilted)");
    simulate_cmd->add_option("--field-points", field_points, "field samples to record");
    simulate_cmd->add_option("--trace", trace_file, "write binary event trace (dt, bond)");
    add_tf_options(simulate_cmd, sim_tf);

    // --- verify ---
    auto* verify = app.add_subcommand("verify", "fast exact self-checks");

    // --- hydro ---
    auto* hydro_cmd = app.add_subcommand("hydro", "solve the macroscopic equations");
    bool transport_flag = false;
    double hyd_T = 0.5, r_dom = 0.0;
    int nu = 1024, nt = 512;
    TfOpts hydro_tf;
    hydro_cmd->add_option("--rho", rho, "density");
    hydro_cmd->add_option("--T", hyd_T, "time horizon");
    hydro_cmd->add_flag("--transport", transport_flag, "transport equation instead of forced heat");
    hydro_cmd->add_option("--domain", r_dom, "half-width of the domain (0 = auto)");
    hydro_cmd->add_option("--nu", nu, "space cells");
    hydro_cmd->add_option("--nt", nt, "time steps");
    add_tf_options(hydro_cmd, hydro_tf);

    // --- experiment wrappers ---
    auto* bg_cmd = app.add_subcommand("bg", "Boltzmann-Gibbs residual trend");
    auto* entropy_cmd = app.add_subcommand("entropy", "relative entropy vs quadratic limit");
    auto* rate_cmd = app.add_subcommand("rate", "rate functional identities");
    double exp_rho = 0.75, exp_gamma = 0.75, exp_T = 0.02;
    std::int64_t exp_replicas = 16, exp_N = 1000000;
    for (auto* cmd : {bg_cmd, entropy_cmd, rate_cmd}) {
        cmd->add_option("--rho", exp_rho, "density");
        cmd->add_option("--gamma", exp_gamma, "a_N = N^gamma");
    }
    bg_cmd->add_option("--T", exp_T, "horizon per run");
    bg_cmd->add_option("--replicas", exp_replicas, "replicas per N");
    entropy_cmd->add_option("--N", exp_N, "largest lattice scale");
    rate_cmd->add_option("--T", exp_T, "variational horizon");

    // --- run ---
    auto* run_cmd = app.add_subcommand("run", "run an experiment described by a TOML config");
    std::string config_path;
    run_cmd->add_option("config", config_path, "path to config.toml")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) {
            fep::Rng rng(seed);
            fep::GrandCanonical gc(rho);
            if (pmf_len > 0) {
                std::vector<std::vector<double>> rows;
                std::vector<int> word(static_cast<std::size_t>(pmf_len));
                for (std::uint64_t bits = 0; bits < (1ULL << pmf_len); ++bits) {
                    for (std::int64_t i = 0; i < pmf_len; ++i)
                        word[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1U);
                    double p = fep::segment_pmf_chain(word, gc);
                    if (p > 0.0) rows.push_back({static_cast<double>(bits), p});
                }
                std::string path = out_dir.empty() ? "pmf_table.csv"
                                                   : (std::filesystem::path(out_dir) / "pmf_table.csv").string();
                if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
                fep::write_csv(path, "word_bits,probability", rows);
                std::cout << "wrote " << path << "\n";
                return 0;
            }
            for (std::int64_t i = 0; i < count; ++i) {
                fep::Configuration c(1);
                if (measure == "gc") {
                    c = fep::sample_gc_segment(gc, length, rng);
                } else if (measure == "canonical") {
                    std::int64_t kk = kpart >= 0 ? kpart
                                                 : static_cast<std::int64_t>(std::llround(rho * (2 * ell + 1)));
                    fep::CanonicalSampler sampler({ell, kk, bnd_a, bnd_b}, gc);
                    auto word = sampler.sample(rng);
                    c = fep::Configuration(static_cast<std::int64_t>(word.size()));
                    for (std::size_t j = 0; j < word.size(); ++j)
                        c.set(static_cast<std::int64_t>(j), word[j]);
                } else if (measure == "perturbed") {
                    double a_n = std::pow(static_cast<double>(bigN), gamma);
                    fep::PerturbedMeasure pm(rho, make_tf(sample_tf), a_n, bigN);
                    c = fep::sample_perturbed_segment(pm, length, length / 2, rng);
                } else {
                    throw fep::ConfigInvalid("unknown measure: " + measure);
                }
                if (format == "binary") {
                    std::string path = "sample_" + std::to_string(i) + ".bin";
                    if (!out_dir.empty()) {
                        std::filesystem::create_directories(out_dir);
                        path = (std::filesystem::path(out_dir) / path).string();
                    }
                    std::ofstream out(path, std::ios::binary);
                    c.save_binary(out);
                    std::cout << "wrote " << path << "\n";
                } else {
                    std::cout << (format == "rle" ? c.to_run_length() : c.to_string()) << "\n";
                }
            }
            return 0;
        }

        if (*simulate_cmd) {
            fep::TestFunction H = make_tf(sim_tf);
            fep::RateModel model = model_name == "asymmetric" ? fep::RateModel::asymmetric()
                                                              : fep::RateModel::symmetric();
            double a_n = std::pow(static_cast<double>(sim_N), tilt_gamma > 0 ? tilt_gamma : 0.75);
            if (tilt_gamma > 0.0)
                model = model_name == "asymmetric" ? fep::RateModel::tilted_asymmetric(H, a_n)
                                                   : fep::RateModel::tilted_symmetric(H, a_n);
            fep::ExperimentConfig helper;
            helper.N = sim_N;
            helper.L = sim_L;
            std::int64_t L = helper.derived_L(H);
            fep::Rng rng(seed);
            fep::Configuration init = fep::sample_gc_ring(fep::GrandCanonical(rho), L, rng);
            fep::FieldObserver fobs(H, rho, std::pow(static_cast<double>(sim_N), 0.75));
            fep::Observer* obs[] = {&fobs};
            fep::SimOptions opts;
            for (std::int64_t i = 1; i <= field_points; ++i)
                opts.sample_times.push_back(sim_T * static_cast<double>(i) / static_cast<double>(field_points));
            opts.record_events = !trace_file.empty();
            fep::RunResult r = fep::simulate(init, model, sim_N, sim_T, obs, rng, opts);
            std::cout << "events=" << r.events << " time=" << r.total_time << "\n";
            std::vector<std::vector<double>> rows;
            for (const auto& fs : fobs.samples()) rows.push_back({0.0, fs.t, fs.value});
            std::string path = out_dir.empty() ? "field.csv"
                                               : (std::filesystem::path(out_dir) / "field.csv").string();
            if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
            fep::write_csv(path, "replica,t,value", rows);
            std::cout << "wrote " << path << "\n";
            if (!trace_file.empty()) {
                std::ofstream tf(trace_file, std::ios::binary);
                double prev = 0.0;
                for (const auto& ev : r.event_log) {
                    double dt = ev.time - prev;
                    prev = ev.time;
                    auto bond = static_cast<std::uint32_t>(ev.bond);
                    tf.write(reinterpret_cast<const char*>(&dt), sizeof(dt));
                    tf.write(reinterpret_cast<const char*>(&bond), sizeof(bond));
                }
                std::cout << "wrote " << trace_file << " (" << r.event_log.size() << " events)\n";
            }
            return 0;
        }

        if (*verify) {
            int fails = 0;
            // gradient identity over all 16 windows
            for (unsigned w = 0; w < 16; ++w) {
                int lhs = fep::rate_sym_window(w) * ((static_cast<int>(w >> 1) & 1) - (static_cast<int>(w >> 2) & 1));
                int rhs = fep::h_window(w & 7u) - fep::h_window((w >> 1) & 7u);
                if (lhs != rhs) ++fails;
            }
            std::cout << (fails == 0 ? "[PASS] " : "[FAIL] ") << "gradient identity (16 windows)\n";
            // closed-form coefficients vs enumeration
            for (double r : {0.6, 0.75, 0.9}) {
                bool ok = true;
                try {
                    fep::Coefficients::make(r);
                } catch (const std::exception&) {
                    ok = false;
                    ++fails;
                }
                std::cout << (ok ? "[PASS] " : "[FAIL] ") << "coefficients at rho=" << r << "\n";
            }
            // pmf identity for words up to length 8
            fep::GrandCanonical gc(0.75);
            double worst = 0.0;
            for (int len = 1; len <= 8; ++len) {
                double total = 0.0;
                std::vector<int> word(static_cast<std::size_t>(len));
                for (unsigned bits = 0; bits < (1u << len); ++bits) {
                    for (int i = 0; i < len; ++i) word[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1u);
                    double chain = fep::segment_pmf_chain(word, gc);
                    total += chain;
                    if (chain > 0.0) worst = std::max(worst, std::abs(chain - fep::segment_pmf(word, gc)));
                }
                worst = std::max(worst, std::abs(total - 1.0));
            }
            std::cout << (worst < 1e-12 ? "[PASS] " : "[FAIL] ") << "segment pmf identity, max dev "
                      << worst << "\n";
            if (worst >= 1e-12) ++fails;
            return fails == 0 ? 0 : 1;
        }

        if (*hydro_cmd) {
            fep::TestFunction H = make_tf(hydro_tf);
            double D = fep::coeff_h_tilde_prime(rho);
            double dom = r_dom > 0.0 ? r_dom
                                     : std::abs(H.center()) + H.support_radius() +
                                           4.0 * std::sqrt(D * hyd_T) + 0.5;
            fep::Grid1D grid{-dom, dom, nu, hyd_T, nt};
            fep::MacroscopicPath path = transport_flag
                                            ? fep::solve_transport(H, rho, grid)
                                            : fep::solve_heat_forced(std::nullopt, H, rho, grid);
            std::vector<std::vector<double>> rows;
            int t_stride = std::max(1, nt / 16);
            for (int it = 0; it <= nt; it += t_stride)
                for (int iu = 0; iu <= nu; ++iu)
                    rows.push_back({grid.t(it), grid.u(iu), path.at(it, iu)});
            std::string path_name = out_dir.empty()
                                        ? "hydro_grid.csv"
                                        : (std::filesystem::path(out_dir) / "hydro_grid.csv").string();
            if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
            fep::write_csv(path_name, "t,u,alpha", rows);
            std::cout << "wrote " << path_name << "\n";
            return 0;
        }

        if (*bg_cmd || *entropy_cmd || *rate_cmd) {
            fep::ExperimentConfig cfg;
            cfg.kind = *bg_cmd ? fep::ExperimentKind::bg
                       : *entropy_cmd ? fep::ExperimentKind::entropy
                                      : fep::ExperimentKind::rate;
            cfg.rho = exp_rho;
            cfg.gamma = exp_gamma;
            cfg.T = *rate_cmd ? std::max(exp_T, 0.25) : exp_T;
            cfg.replicas = exp_replicas;
            cfg.N = exp_N;
            cfg.seed = seed;
            cfg.out_dir = out_dir;
            cfg.threads = threads;
            if (*bg_cmd) {
                cfg.tf_width = 0.5;
                cfg.tf_amplitude = 1.0;
            }
            if (*entropy_cmd) cfg.tf_normalize = true;
            cfg.validate();
            return report(fep::run(cfg));
        }

        if (*run_cmd) {
            fep::ExperimentConfig cfg = fep::ExperimentConfig::from_toml(fep::toml::parse_file(config_path));
            if (cfg.out_dir.empty()) cfg.out_dir = out_dir;
            if (threads > 0) cfg.threads = threads;
            if (!app.get_option("--seed")->empty()) cfg.seed = seed;
            return report(fep::run(cfg));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
