#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dymecu {

// One per-iteration record. `wall_clock_s` is the only non-deterministic
// field and is excluded from determinism comparisons and summaries.
struct MetricsRecord {
    long step = 0;
    int iteration = 0;
    double ep_return_mean = 0.0; // over episodes finished this iteration
    int episodes = 0;
    double rint_raw_mean = 0.0;
    double rint_raw_std = 0.0;
    double rint_norm_mean = 0.0;
    double rint_norm_std = 0.0;
    double coverage = 0.0; // cumulative unique-state fraction
    double loss1 = 0.0;
    double loss2 = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double wall_clock_s = 0.0;
};

struct MetricsLog {
    std::uint64_t seed = 0;
    std::vector<MetricsRecord> records;

    double final_coverage() const { return records.empty() ? 0.0 : records.back().coverage; }
    // mean return over all completed episodes in the run
    double mean_episode_return() const;
};

nlohmann::json record_to_json(const MetricsRecord& r, bool include_wall_clock);
MetricsRecord record_from_json(const nlohmann::json& j);

// One JSON object per line; steps must be strictly increasing.
void write_jsonl(const std::string& path, const MetricsLog& log);
MetricsLog read_jsonl(const std::string& path);

// field-wise equality ignoring wall_clock_s
bool deterministic_equal(const MetricsLog& a, const MetricsLog& b);

// names of the numeric fields exported to the cross-seed CSV
const std::vector<std::string>& metric_names();
double metric_value(const MetricsRecord& r, const std::string& name);

} // namespace dymecu
