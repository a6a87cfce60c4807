#pragma once

#include <string>
#include <vector>

#include "dymecu/ppo.hpp"

namespace dymecu {

enum class EnvKind { grid, chain };
enum class ModuleKind {
    dymecu,
    dymecu_one_learner,
    dymecu_predictor_heads,
    rnd,
    icm,
    disagreement,
    none
};
enum class RunMode { joint, pretrain_then_finetune };

std::string to_string(EnvKind k);
std::string to_string(ModuleKind k);
std::string to_string(RunMode m);
ModuleKind module_from_string(const std::string& s);

struct EnvSection {
    EnvKind kind = EnvKind::grid;
    int width = 20;
    int height = 20;
    int goal_x = 19;
    int goal_y = 19;
    // shortest path to the default goal is 38 steps; a 40-step horizon keeps
    // the goal reachable while undirected walks stay near the start
    int max_steps = 40;
    bool onehot = true;
    int chain_n = 10;
    double slip_prob = 0.0;

    bool operator==(const EnvSection&) const = default;
};

struct CuriositySection {
    double alpha = 0.99;
    int latent_dim = 32;
    std::vector<int> hidden = {64, 64};
    std::string activation = "relu";
    double lr = 1e-3;
    bool normalize = true;
    int ensemble = 5;
    std::vector<int> extra_hidden = {32, 32};
    int minibatch = 256;
    std::string omega_init = "seeded";    // seeded | learner_average
    std::string memory_update = "both";   // both | learner1 | learner2
    double icm_forward_weight = 0.2;      // inverse loss gets the complement

    bool operator==(const CuriositySection&) const = default;
};

struct RunSection {
    ModuleKind module = ModuleKind::dymecu;
    std::vector<long> seeds = {1, 2, 3, 4, 5};
    long total_steps = 50000;
    RunMode mode = RunMode::joint;
    long pretrain_steps = 0;
    std::string out_dir = "runs/out";

    bool operator==(const RunSection&) const = default;
};

// Complete description of one experiment. Serializes to a flat TOML-style
// text with fixed section and key order, so parse(serialize(cfg)) == cfg.
struct RunConfig {
    RunSection run;
    EnvSection env;
    CuriositySection curiosity;
    PpoConfig ppo;

    bool operator==(const RunConfig&) const = default;
};

struct ConfigError : std::runtime_error {
    ConfigError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_),
          message(msg) {}
    int line;
    std::string message;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);

// Cross-field consistency checks; throws std::invalid_argument with every
// problem listed, before any training starts.
void validate(const RunConfig& cfg);

// Fixed offsets deriving all per-run seeds from the run seed, so ablations
// differ only where intended.
struct SeedPlan {
    std::uint64_t theta1, theta2, omega; // curiosity networks (seed, seed+1, seed+2)
    std::uint64_t policy, value;
    std::uint64_t env_base;   // episode k resets with env_base + k
    std::uint64_t actions;    // rollout action sampling
    std::uint64_t shuffle;    // minibatch shuffling
    std::uint64_t module_rng; // bootstrap draws etc.
};
SeedPlan seed_plan(std::uint64_t run_seed);

} // namespace dymecu
