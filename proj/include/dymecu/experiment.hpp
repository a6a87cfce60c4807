#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dymecu/config.hpp"
#include "dymecu/metrics.hpp"

namespace dymecu {

// Output root override; relative out_dirs resolve under it.
constexpr const char* kOutRootEnvVar = "DYMECU_OUT_ROOT";

std::string resolve_out_dir(const std::string& out_dir);

struct RunOptions {
    int jobs = 1; // seeds run in parallel when > 1
    std::optional<std::vector<long>> seeds_override;
    std::optional<std::string> out_override;
    bool quiet = false;
};

struct RunOutputs {
    std::string out_dir;
    std::vector<std::string> jsonl_paths; // one per seed, in seed order
    std::string summary_path;
    std::string csv_path;
    std::vector<MetricsLog> logs;
};

// Runs every seed, writes seed<k>.metrics.jsonl, summary.json (canonical,
// byte-stable across reruns) and metrics.csv (step, metric, mean, std across
// seeds). Throws on config errors; NanAbort is caught, checkpointed to
// nan_checkpoint.json and reported via exit code.
int run_experiment(const RunConfig& cfg, const RunOptions& opt, RunOutputs* outputs = nullptr);

// Summary document for a finished set of runs (no wall-clock content).
nlohmann::json build_summary(const RunConfig& cfg, const std::vector<MetricsLog>& logs);
std::string canonical_json(const nlohmann::json& j);

void write_metrics_csv(const std::string& path, const std::vector<MetricsLog>& logs);

// Cumulative unique-state coverage of a uniform-random policy; the "random
// score" reference for baseline-normalized scores.
double random_policy_coverage(const RunConfig& cfg, long seed, long total_steps);

struct AblateOptions {
    RunOptions run;
    std::vector<double> alphas = {0.99, 0.999, 0.9999};
};

struct AblateRow {
    std::string variant;
    double alpha = 0.0;
    double score = 0.0;        // mean final coverage across seeds
    double random_score = 0.0;
    double baseline_avg = 0.0;
    double bns_value = 0.0;
};

// Expands {dual, one_learner, one_source_update, predictor_heads} x alphas,
// runs the three baselines once each, and scores every variant with BNS
// against the baseline average. Writes ablate_bns.csv under the output dir.
int run_ablation(const RunConfig& base, const AblateOptions& opt,
                 std::vector<AblateRow>* rows_out = nullptr);

// Runs the config twice and verifies the summaries byte-identical and the
// metric logs equal up to wall-clock. Returns 0 on success.
int replay_check(const RunConfig& cfg, const RunOptions& opt);

} // namespace dymecu
