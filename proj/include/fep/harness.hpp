#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fep/exact.hpp"
#include "fep/testfunction.hpp"
#include "fep/toml.hpp"

namespace fep {

enum class ExperimentKind {
    stationarity,
    clt,
    hydro,
    bg,
    entropy,
    ensembles,
    martingale,
    transport,
    rate,
};

ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::clt;
    double rho = 0.75;
    std::int64_t N = 1000;
    double gamma = 0.75;  // a_N = N^gamma
    std::int64_t L = 0;   // ring size; 0 = derived from the test-function support
    double T = 0.1;
    std::int64_t replicas = 1;
    std::uint64_t seed = 1;
    std::string out_dir;
    int threads = 0;

    // test-function parameters
    std::string tf_profile = "bump";
    double tf_center = 0.0;
    double tf_width = 1.0;
    double tf_amplitude = 1.0;
    bool tf_normalize = false;

    // kind-specific knobs
    ModelKind model = ModelKind::symmetric;
    std::int64_t k = 7;                  // stationarity particle count
    std::int64_t events = 1000000;       // stationarity event budget
    std::int64_t state_samples = 5000;   // stationarity occupancy samples
    std::int64_t samples = 10000;        // clt sample count
    std::vector<std::int64_t> ell_list = {32, 64, 128, 256, 512};
    std::int64_t ens_samples = 20000;
    std::vector<std::int64_t> n_list;  // empty = per-kind default
    std::int64_t block_sites = 0;  // hydro profile block width (0 = auto)
    double transport_time = 0.5;

    double a_N() const;
    std::int64_t support_sites(const TestFunction& H) const;
    TestFunction test_function() const;
    std::int64_t derived_L(const TestFunction& H, double extra_u = 0.0) const;

    static ExperimentConfig from_toml(const toml::Table& table);
    void validate() const;  // throws ConfigInvalid; prints warnings to stderr
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ExperimentResult {
    std::string kind;
    std::vector<CheckResult> checks;
    std::map<std::string, double> metrics;
    std::vector<std::string> series_files;
    bool interrupted = false;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

// experiment drivers (shared by the CLI and the acceptance suite)
ExperimentResult run_stationarity(const ExperimentConfig& cfg);
ExperimentResult run_clt(const ExperimentConfig& cfg);
ExperimentResult run_martingale(const ExperimentConfig& cfg);
ExperimentResult run_hydro_experiment(const ExperimentConfig& cfg);
ExperimentResult run_transport_experiment(const ExperimentConfig& cfg);
ExperimentResult run_entropy(const ExperimentConfig& cfg);
ExperimentResult run_ensembles(const ExperimentConfig& cfg);
ExperimentResult run_bg_experiment(const ExperimentConfig& cfg);
ExperimentResult run_rate_experiment(const ExperimentConfig& cfg);

/// Dispatch on cfg.kind, write outputs when cfg.out_dir is set.
ExperimentResult run(const ExperimentConfig& cfg);

/// Install a SIGINT flag so replica loops stop scheduling new replicas and
/// partial results are still written.
void install_interrupt_handler();
bool interrupted();

// deterministic text formatting for CSV/JSON payloads
std::string format_double(double v);
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);
void write_summary_json(const std::string& path, const ExperimentResult& result,
                        const ExperimentConfig& cfg);

}  // namespace fep
