#include "dymecu/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "dymecu/env.hpp"
#include "dymecu/ppo.hpp"
#include "dymecu/scores.hpp"

namespace dymecu {

namespace fs = std::filesystem;

std::string resolve_out_dir(const std::string& out_dir) {
    fs::path p(out_dir);
    if (p.is_absolute()) return p.string();
    const char* root = std::getenv(kOutRootEnvVar);
    if (root && *root) return (fs::path(root) / p).string();
    return p.string();
}

std::string canonical_json(const nlohmann::json& j) {
    // nlohmann objects iterate in key order and doubles print with
    // shortest round-trip representations, so this is byte-stable
    return j.dump(2) + "\n";
}

nlohmann::json build_summary(const RunConfig& cfg, const std::vector<MetricsLog>& logs) {
    nlohmann::json per_seed = nlohmann::json::array();
    double cov_sum = 0.0, cov_sq = 0.0, ret_sum = 0.0, ret_sq = 0.0;
    for (const auto& log : logs) {
        const double cov = log.final_coverage();
        const double ret = log.mean_episode_return();
        cov_sum += cov;
        cov_sq += cov * cov;
        ret_sum += ret;
        ret_sq += ret * ret;
        const auto& last = log.records.back();
        per_seed.push_back({{"seed", log.seed},
                            {"final_step", last.step},
                            {"iterations", log.records.size()},
                            {"final_coverage", cov},
                            {"mean_episode_return", ret},
                            {"final_ep_return_mean", last.ep_return_mean},
                            {"final_rint_raw_mean", last.rint_raw_mean},
                            {"final_rint_norm_mean", last.rint_norm_mean},
                            {"final_loss1", last.loss1},
                            {"final_loss2", last.loss2}});
    }
    const double n = static_cast<double>(logs.size());
    const double cov_mean = cov_sum / n;
    const double ret_mean = ret_sum / n;
    const double cov_std = std::sqrt(std::max(0.0, cov_sq / n - cov_mean * cov_mean));
    const double ret_std = std::sqrt(std::max(0.0, ret_sq / n - ret_mean * ret_mean));

    nlohmann::json j;
    RunConfig echoed = cfg;
    echoed.run.out_dir = ""; // a file location, not an experimental parameter
    j["config"] = serialize_config(echoed);
    j["seeds"] = cfg.run.seeds;
    j["per_seed"] = per_seed;
    j["aggregate"] = {{"coverage_mean", cov_mean},
                      {"coverage_std", cov_std},
                      {"mean_episode_return_mean", ret_mean},
                      {"mean_episode_return_std", ret_std}};
    return j;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsLog>& logs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "step,metric,mean,std\n";
    if (logs.empty()) return;
    std::size_t iters = logs[0].records.size();
    for (const auto& l : logs) iters = std::min(iters, l.records.size());
    char buf[64];
    const auto fmt = [&buf](double v) {
        const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, p);
    };
    for (std::size_t it = 0; it < iters; ++it) {
        for (const auto& name : metric_names()) {
            double mean = 0.0, var = 0.0;
            for (const auto& l : logs) mean += metric_value(l.records[it], name);
            mean /= static_cast<double>(logs.size());
            for (const auto& l : logs) {
                const double d = metric_value(l.records[it], name) - mean;
                var += d * d;
            }
            var /= static_cast<double>(logs.size());
            out << logs[0].records[it].step << ',' << name << ',' << fmt(mean) << ','
                << fmt(std::sqrt(var)) << '\n';
        }
    }
}

namespace {

RunConfig apply_overrides(RunConfig cfg, const RunOptions& opt) {
    if (opt.seeds_override) cfg.run.seeds = *opt.seeds_override;
    if (opt.out_override) cfg.run.out_dir = *opt.out_override;
    return cfg;
}

// train every seed, in order; jobs > 1 fans out over threads
std::vector<MetricsLog> run_all_seeds(const RunConfig& cfg, int jobs) {
    const auto& seeds = cfg.run.seeds;
    std::vector<MetricsLog> logs(seeds.size());
    std::exception_ptr first_error;
    std::mutex err_mu;

    if (jobs <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i)
            logs[i] = train_loop(cfg, static_cast<std::uint64_t>(seeds[i]));
        return logs;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= seeds.size()) return;
            try {
                logs[i] = train_loop(cfg, static_cast<std::uint64_t>(seeds[i]));
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(seeds.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return logs;
}

} // namespace

int run_experiment(const RunConfig& cfg_in, const RunOptions& opt, RunOutputs* outputs) {
    const RunConfig cfg = apply_overrides(cfg_in, opt);
    validate(cfg);

    const std::string out_dir = resolve_out_dir(cfg.run.out_dir);
    fs::create_directories(out_dir);

    std::vector<MetricsLog> logs;
    try {
        logs = run_all_seeds(cfg, opt.jobs);
    } catch (const NanAbort& e) {
        const std::string ckpt = (fs::path(out_dir) / "nan_checkpoint.json").string();
        std::ofstream out(ckpt);
        out << e.state.dump(2) << "\n";
        std::cerr << "run aborted: " << e.what() << " (checkpoint written to " << ckpt << ")\n";
        return 3;
    }

    RunOutputs local;
    local.out_dir = out_dir;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const std::string path =
            (fs::path(out_dir) / ("seed" + std::to_string(cfg.run.seeds[i]) + ".metrics.jsonl"))
                .string();
        write_jsonl(path, logs[i]);
        local.jsonl_paths.push_back(path);
    }
    local.summary_path = (fs::path(out_dir) / "summary.json").string();
    {
        std::ofstream out(local.summary_path, std::ios::binary);
        out << canonical_json(build_summary(cfg, logs));
    }
    local.csv_path = (fs::path(out_dir) / "metrics.csv").string();
    write_metrics_csv(local.csv_path, logs);
    local.logs = std::move(logs);

    if (!opt.quiet) {
        std::cout << "wrote " << local.jsonl_paths.size() << " metric logs, "
                  << local.summary_path << ", " << local.csv_path << "\n";
    }
    if (outputs) *outputs = std::move(local);
    return 0;
}

double random_policy_coverage(const RunConfig& cfg, long seed, long total_steps) {
    auto env = make_env(cfg);
    Rng rng(static_cast<std::uint64_t>(seed) + 0x50000);
    std::set<int> visited;
    std::uint64_t episode = 0;
    env->reset(static_cast<std::uint64_t>(seed) + 0x20000 + episode);
    visited.insert(env->state_index());
    const int arity = env->num_actions();
    for (long t = 0; t < total_steps; ++t) {
        const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(arity)));
        const StepResult r = env->step(a);
        visited.insert(env->state_index());
        if (r.done) {
            ++episode;
            env->reset(static_cast<std::uint64_t>(seed) + 0x20000 + episode);
            visited.insert(env->state_index());
        }
    }
    return coverage(visited, *env);
}

namespace {

double mean_final_coverage(const std::vector<MetricsLog>& logs) {
    double s = 0.0;
    for (const auto& l : logs) s += l.final_coverage();
    return s / static_cast<double>(logs.size());
}

} // namespace

int run_ablation(const RunConfig& base, const AblateOptions& opt,
                 std::vector<AblateRow>* rows_out) {
    const RunConfig cfg = apply_overrides(base, opt.run);
    validate(cfg);
    const std::string out_root = resolve_out_dir(cfg.run.out_dir);
    fs::create_directories(out_root);

    struct Variant {
        std::string name;
        ModuleKind module;
        std::string memory_update;
    };
    const std::vector<Variant> variants = {
        {"dual", ModuleKind::dymecu, "both"},
        {"one_learner", ModuleKind::dymecu_one_learner, "both"},
        {"one_source_update", ModuleKind::dymecu, "learner1"},
        {"predictor_heads", ModuleKind::dymecu_predictor_heads, "both"},
    };
    const std::vector<ModuleKind> baselines = {ModuleKind::rnd, ModuleKind::icm,
                                               ModuleKind::disagreement};

    auto run_one = [&](ModuleKind module, const std::string& memory_update, double alpha,
                       const std::string& tag) {
        RunConfig c = cfg;
        c.run.module = module;
        c.curiosity.memory_update = memory_update;
        c.curiosity.alpha = alpha;
        c.run.out_dir = (fs::path(out_root) / tag).string();
        RunOptions ro = opt.run;
        ro.seeds_override.reset();
        ro.out_override.reset();
        ro.quiet = true;
        RunOutputs outs;
        const int rc = run_experiment(c, ro, &outs);
        if (rc != 0) throw std::runtime_error("ablation run '" + tag + "' failed");
        return mean_final_coverage(outs.logs);
    };

    // baseline average and random-walk reference share the sweep's budget
    double baseline_sum = 0.0;
    for (const auto mk : baselines)
        baseline_sum += run_one(mk, "both", cfg.curiosity.alpha, to_string(mk));
    const double baseline_avg = baseline_sum / static_cast<double>(baselines.size());

    double random_sum = 0.0;
    for (long s : cfg.run.seeds) random_sum += random_policy_coverage(cfg, s, cfg.run.total_steps);
    const double random_score = random_sum / static_cast<double>(cfg.run.seeds.size());

    std::vector<AblateRow> rows;
    for (const auto& v : variants) {
        for (double alpha : opt.alphas) {
            std::string alpha_tag = std::to_string(alpha);
            alpha_tag.erase(alpha_tag.find_last_not_of('0') + 1);
            if (!alpha_tag.empty() && alpha_tag.back() == '.') alpha_tag.pop_back();
            const std::string tag = v.name + "_alpha" + alpha_tag;
            AblateRow row;
            row.variant = v.name;
            row.alpha = alpha;
            row.score = run_one(v.module, v.memory_update, alpha, tag);
            row.random_score = random_score;
            row.baseline_avg = baseline_avg;
            row.bns_value = bns(row.score, random_score, baseline_avg);
            rows.push_back(row);
        }
    }

    const std::string csv = (fs::path(out_root) / "ablate_bns.csv").string();
    {
        std::ofstream out(csv);
        out << "variant,alpha,score,random,baseline_avg,bns\n";
        for (const auto& r : rows) {
            out << r.variant << ',' << r.alpha << ',' << r.score << ',' << r.random_score << ','
                << r.baseline_avg << ',' << r.bns_value << '\n';
        }
    }
    if (!opt.run.quiet) {
        std::cout << "ablation matrix complete: " << rows.size() << " runs, BNS table at " << csv
                  << "\n";
        for (const auto& r : rows)
            std::cout << "  " << r.variant << " alpha=" << r.alpha << " score=" << r.score
                      << " bns=" << r.bns_value << "\n";
    }
    if (rows_out) *rows_out = rows;
    return 0;
}

int replay_check(const RunConfig& cfg_in, const RunOptions& opt) {
    const RunConfig cfg = apply_overrides(cfg_in, opt);
    validate(cfg);
    const std::string out_root = resolve_out_dir(cfg.run.out_dir);

    auto run_into = [&](const std::string& sub) {
        RunConfig c = cfg;
        c.run.out_dir = (fs::path(out_root) / sub).string();
        RunOptions ro = opt;
        ro.seeds_override.reset();
        ro.out_override.reset();
        ro.quiet = true;
        RunOutputs outs;
        if (run_experiment(c, ro, &outs) != 0)
            throw std::runtime_error("replay-check run failed");
        return outs;
    };

    const RunOutputs a = run_into("replay_a");
    const RunOutputs b = run_into("replay_b");

    auto read_file = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool ok = read_file(a.summary_path) == read_file(b.summary_path);
    if (!ok) {
        std::cerr << "replay-check: summary JSON differs between runs\n";
        return 1;
    }
    for (std::size_t i = 0; i < a.logs.size(); ++i) {
        if (!deterministic_equal(a.logs[i], b.logs[i])) {
            std::cerr << "replay-check: metric log for seed " << cfg.run.seeds[i]
                      << " differs (ignoring wall clock)\n";
            return 1;
        }
    }
    if (!opt.quiet)
        std::cout << "replay-check: ok (" << a.logs.size()
                  << " seeds, byte-identical summaries)\n";
    return 0;
}

} // namespace dymecu
