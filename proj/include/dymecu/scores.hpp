#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dymecu {

// Raised when a normalization denominator degenerates (human == random, or
// baseline average == random).
struct FlaggedRowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (agent - random) / (human - random); may be negative or exceed 1
double hns(double agent, double random_score, double human_score);

// (method - random) / (baseline_avg - random)
double bns(double method, double random_score, double baseline_avg);

// CSV with header task,random,human,<method...>; one row per task.
struct ScoreTable {
    std::vector<std::string> methods;
    struct Row {
        std::string task;
        double random_score = 0.0;
        double human_score = 0.0;
        std::vector<double> scores; // aligned with `methods`
    };
    std::vector<Row> rows;

    int method_index(const std::string& name) const;
};

ScoreTable load_score_table(const std::string& path);
ScoreTable parse_score_table(const std::string& csv_text);

struct AggregateResult {
    double mean_hns_all = 0.0;   // every computable row, inverted denominators included
    double mean_hns_valid = 0.0; // rows with human > random only
    int n_rows_all = 0;
    int n_rows_valid = 0;
    int n_sota = 0; // rows where `method` strictly exceeds every other method
    std::vector<std::string> flagged; // tasks with human <= random
};

// Mean HNS and #SOTA for one method column. Throws std::invalid_argument when
// no computable row exists.
AggregateResult aggregate(const ScoreTable& table, const std::string& method);

} // namespace dymecu
