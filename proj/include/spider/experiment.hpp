#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spider/algorithms.hpp"
#include "spider/em.hpp"
#include "spider/logreg.hpp"

namespace spider::exp {

struct ConfigError : std::runtime_error {
    ConfigError(std::string field_path, const std::string& what)
        : std::runtime_error(field_path + ": " + what),
          field(std::move(field_path)) {}
    std::string field;
};

struct ProblemSpec {
    enum class Type { synthetic, file, quadratic_toy, gaussian_em_fixture };
    Type type = Type::synthetic;
    int n = 100;
    int d = 5;
    int q = 5;                  // quadratic toy dimension
    Vec theta_star;             // synthetic; empty means zeros
    double theta_star_scalar = 1.0;  // fixture
    double sigma2 = 0.05;
    double tau = 1.0;
    double radius = 1.0;        // quadratic toy constraint
    std::uint64_t seed = 0;
    std::string path;
};

struct OracleSpec {
    bool exact = true;          // exact_quadrature vs mcmc
    std::int64_t m0 = 1;        // refresh budget
    std::int64_t mt = 1;        // inner budget
    double growth_t = 0.0;      // optional polynomial budget growth t^a
    double growth_k = 0.0;      // ... and (k+1)^abar
    std::int64_t burn_in = 100;
};

struct StepsizePiece {
    double epoch_from = 0.0;
    double gamma = 0.1;
};

struct RunSpec {
    double epochs = 1.0;
    std::int64_t kin = 0;       // 0: default ceil(n / b)
    std::int64_t b = 1;
    std::int64_t b_prime = 0;   // 0: default n
    std::vector<StepsizePiece> stepsize{{0.0, 0.1}};
    bool with_replacement = false;
    bool record_objective = false;
};

struct ExperimentConfig {
    ProblemSpec problem;
    std::string algorithm = "spider";  // em|online_em|spider|spider_corr|vmfb
    OracleSpec oracle;
    RunSpec run;
    int replicates = 1;
    std::uint64_t master_seed = 0;
    bool record_walltime = false;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Everything a driver needs, assembled once per problem seed.
struct AssembledProblem {
    std::shared_ptr<ForwardOracle> oracle;
    std::shared_ptr<const CurvedExpFamilyModel> em_model;  // null for the toy
    ProxFunction g = ProxFunction::zero();
    MetricMap metric_fn;
    Vec s_init;
    MetricOperator B_init = MetricOperator::identity(1);
    std::function<double(const Vec&)> objective;
    int n = 0;
};

AssembledProblem assemble_problem(const ExperimentConfig& config);

struct ReplicateSummary {
    int replicate = 0;
    double final_delta = 0.0;
    double last5_mean_delta = 0.0;
    std::int64_t oracle_calls = 0;
    std::int64_t mc_draws = 0;
    std::int64_t wall_ns = 0;
};

struct ExperimentOutcome {
    std::vector<std::filesystem::path> trace_files;
    std::filesystem::path summary_file;
    nlohmann::json summary;
    std::vector<ReplicateSummary> replicates;
    double median_last5_mean_delta = 0.0;
};

/// Runs all replicates (concurrently; outputs are deterministic in the
/// seeds), writes trace_<algorithm>_<r>.csv per replicate and summary.json.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& outdir);

/// Runs each config (they must share the problem seed) and merges the
/// per-epoch stationarity statistics; emits the variance-reduction
/// ordering verdict when the compared set contains spider_corr, spider
/// and online_em.
nlohmann::json compare(const std::vector<ExperimentConfig>& configs,
                       const std::filesystem::path& outdir);

}  // namespace spider::exp
