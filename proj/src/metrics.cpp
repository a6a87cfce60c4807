#include "dymecu/metrics.hpp"

#include <fstream>
#include <stdexcept>

namespace dymecu {

using nlohmann::json;

double MetricsLog::mean_episode_return() const {
    double sum = 0.0;
    long n = 0;
    for (const auto& r : records) {
        sum += r.ep_return_mean * r.episodes;
        n += r.episodes;
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

json record_to_json(const MetricsRecord& r, bool include_wall_clock) {
    json j{{"step", r.step},
           {"iteration", r.iteration},
           {"ep_return_mean", r.ep_return_mean},
           {"episodes", r.episodes},
           {"rint_raw_mean", r.rint_raw_mean},
           {"rint_raw_std", r.rint_raw_std},
           {"rint_norm_mean", r.rint_norm_mean},
           {"rint_norm_std", r.rint_norm_std},
           {"coverage", r.coverage},
           {"loss1", r.loss1},
           {"loss2", r.loss2},
           {"policy_loss", r.policy_loss},
           {"value_loss", r.value_loss},
           {"entropy", r.entropy}};
    if (include_wall_clock) j["wall_clock_s"] = r.wall_clock_s;
    return j;
}

MetricsRecord record_from_json(const json& j) {
    MetricsRecord r;
    r.step = j.at("step").get<long>();
    r.iteration = j.at("iteration").get<int>();
    r.ep_return_mean = j.at("ep_return_mean").get<double>();
    r.episodes = j.at("episodes").get<int>();
    r.rint_raw_mean = j.at("rint_raw_mean").get<double>();
    r.rint_raw_std = j.at("rint_raw_std").get<double>();
    r.rint_norm_mean = j.at("rint_norm_mean").get<double>();
    r.rint_norm_std = j.at("rint_norm_std").get<double>();
    r.coverage = j.at("coverage").get<double>();
    r.loss1 = j.at("loss1").get<double>();
    r.loss2 = j.at("loss2").get<double>();
    r.policy_loss = j.at("policy_loss").get<double>();
    r.value_loss = j.at("value_loss").get<double>();
    r.entropy = j.at("entropy").get<double>();
    if (j.contains("wall_clock_s")) r.wall_clock_s = j.at("wall_clock_s").get<double>();
    return r;
}

void write_jsonl(const std::string& path, const MetricsLog& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_jsonl: cannot open " + path);
    long prev = -1;
    for (const auto& r : log.records) {
        if (r.step <= prev) throw std::logic_error("write_jsonl: steps must increase");
        prev = r.step;
        out << record_to_json(r, true).dump() << '\n';
    }
}

MetricsLog read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_jsonl: cannot open " + path);
    MetricsLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        log.records.push_back(record_from_json(json::parse(line)));
    }
    return log;
}

bool deterministic_equal(const MetricsLog& a, const MetricsLog& b) {
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        if (record_to_json(a.records[i], false) != record_to_json(b.records[i], false))
            return false;
    }
    return true;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "ep_return_mean", "episodes",      "rint_raw_mean", "rint_raw_std", "rint_norm_mean",
        "rint_norm_std",  "coverage",      "loss1",         "loss2",        "policy_loss",
        "value_loss",     "entropy"};
    return names;
}

double metric_value(const MetricsRecord& r, const std::string& name) {
    if (name == "ep_return_mean") return r.ep_return_mean;
    if (name == "episodes") return static_cast<double>(r.episodes);
    if (name == "rint_raw_mean") return r.rint_raw_mean;
    if (name == "rint_raw_std") return r.rint_raw_std;
    if (name == "rint_norm_mean") return r.rint_norm_mean;
    if (name == "rint_norm_std") return r.rint_norm_std;
    if (name == "coverage") return r.coverage;
    if (name == "loss1") return r.loss1;
    if (name == "loss2") return r.loss2;
    if (name == "policy_loss") return r.policy_loss;
    if (name == "value_loss") return r.value_loss;
    if (name == "entropy") return r.entropy;
    throw std::invalid_argument("metric_value: unknown metric '" + name + "'");
}

} // namespace dymecu
