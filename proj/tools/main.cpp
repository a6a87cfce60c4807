#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dymecu/config.hpp"
#include "dymecu/experiment.hpp"
#include "dymecu/scores.hpp"

namespace {

std::vector<long> expand_seeds(const std::string& spec) {
    // a bare count N means seeds 1..N; otherwise a comma list
    if (spec.find(',') == std::string::npos) {
        const long n = std::stol(spec);
        if (n < 1) throw std::runtime_error("--seeds must be a positive count or a comma list");
        std::vector<long> out;
        for (long i = 1; i <= n; ++i) out.push_back(i);
        return out;
    }
    std::vector<long> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
    return out;
}

int cmd_score(const std::string& table_path, const std::string& mode, const std::string& method,
              const std::vector<std::string>& baselines) {
    const dymecu::ScoreTable table = dymecu::load_score_table(table_path);
    if (mode == "hns") {
        std::cout << "task,hns\n";
        for (const auto& row : table.rows) {
            const double score = row.scores[static_cast<std::size_t>(table.method_index(method))];
            if (row.human_score == row.random_score) {
                std::cout << row.task << ",flagged(human==random)\n";
                continue;
            }
            std::cout << row.task << ',' << dymecu::hns(score, row.random_score, row.human_score)
                      << (row.human_score < row.random_score ? " (flagged: random>human)" : "")
                      << "\n";
        }
        const auto agg = dymecu::aggregate(table, method);
        std::cout << "mean_hns_all_rows," << agg.mean_hns_all << " (" << agg.n_rows_all
                  << " rows)\n";
        std::cout << "mean_hns_valid_rows," << agg.mean_hns_valid << " (" << agg.n_rows_valid
                  << " rows)\n";
        std::cout << "n_sota," << agg.n_sota << "\n";
        if (!agg.flagged.empty()) {
            std::cout << "flagged_rows,";
            for (std::size_t i = 0; i < agg.flagged.size(); ++i)
                std::cout << (i ? ";" : "") << agg.flagged[i];
            std::cout << "\n";
        }
        return 0;
    }
    if (mode == "bns") {
        if (baselines.empty())
            throw std::runtime_error("--baselines required for bns mode");
        std::cout << "task,bns\n";
        for (const auto& row : table.rows) {
            const double score = row.scores[static_cast<std::size_t>(table.method_index(method))];
            double avg = 0.0;
            for (const auto& b : baselines)
                avg += row.scores[static_cast<std::size_t>(table.method_index(b))];
            avg /= static_cast<double>(baselines.size());
            std::cout << row.task << ',' << dymecu::bns(score, row.random_score, avg) << "\n";
        }
        return 0;
    }
    throw std::runtime_error("--mode must be hns or bns");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"curiosity-driven exploration toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string seeds_spec;
    std::string out_override;
    int jobs = 1;

    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run config (TOML)")->required();
        cmd->add_option("--seeds", seeds_spec,
                        "seed count (N -> 1..N) or comma-separated list; overrides the config");
        cmd->add_option("--out", out_override, "output directory override");
        cmd->add_option("--jobs", jobs, "parallel seed workers");
    };

    auto* run_cmd = app.add_subcommand("run", "execute one experiment across its seeds");
    add_run_flags(run_cmd);

    auto* ablate_cmd = app.add_subcommand(
        "ablate", "expand the variant x alpha matrix, run baselines, produce BNS values");
    add_run_flags(ablate_cmd);

    auto* replay_cmd =
        app.add_subcommand("replay-check", "run twice and verify byte-identical summaries");
    add_run_flags(replay_cmd);

    std::string table_path, score_mode = "hns", method = "ours";
    std::vector<std::string> baselines;
    auto* score_cmd = app.add_subcommand("score", "HNS/BNS over a CSV score table");
    score_cmd->add_option("--table", table_path, "CSV: task,random,human,<method...>")->required();
    score_cmd->add_option("--mode", score_mode, "hns or bns")->default_val("hns");
    score_cmd->add_option("--method", method, "method column to score")->default_val("ours");
    score_cmd->add_option("--baselines", baselines, "baseline columns for bns")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (score_cmd->parsed()) return cmd_score(table_path, score_mode, method, baselines);

        const dymecu::RunConfig cfg = dymecu::load_config(config_path);
        dymecu::validate(cfg);
        dymecu::RunOptions opt;
        opt.jobs = jobs;
        if (!seeds_spec.empty()) opt.seeds_override = expand_seeds(seeds_spec);
        if (!out_override.empty()) opt.out_override = out_override;

        if (run_cmd->parsed()) return dymecu::run_experiment(cfg, opt);
        if (replay_cmd->parsed()) return dymecu::replay_check(cfg, opt);
        if (ablate_cmd->parsed()) {
            dymecu::AblateOptions aopt;
            aopt.run = opt;
            return dymecu::run_ablation(cfg, aopt);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
