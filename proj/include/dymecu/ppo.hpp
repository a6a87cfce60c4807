#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dymecu/curiosity.hpp"
#include "dymecu/metrics.hpp"
#include "dymecu/mlp.hpp"
#include "dymecu/optim.hpp"

namespace dymecu {

struct RunConfig;
class Env;

struct PpoConfig {
    double gamma = 0.99;      // discount factor
    double lambda_gae = 0.95;
    double clip_eps = 0.2;
    int epochs = 4;
    int minibatch = 256;
    double zeta = 1.0; // intrinsic reward coefficient
    double beta = 2.0; // extrinsic reward coefficient
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double lr = 3e-4; // 0 freezes the policy (closed-form tests)
    int rollout_steps = 2048;
    std::vector<int> hidden = {64, 64};

    bool operator==(const PpoConfig&) const = default;
};

// r_total = zeta * r_int + beta * r_ext
double total_reward(double r_int, double r_ext, const PpoConfig& cfg);

struct PolicyState {
    MlpSpec policy_spec; // obs -> action logits
    MlpSpec value_spec;  // obs -> scalar
    ParamVector policy;
    ParamVector value;
    OptState policy_opt;
    OptState value_opt;
};

PolicyState make_policy(int obs_dim, int num_actions, const std::vector<int>& hidden,
                        std::uint64_t seed);

struct ActionSample {
    int action = 0;
    double log_prob = 0.0;
    double value = 0.0;
};

std::vector<double> policy_logits(const PolicyState& p, std::span<const double> obs);
double value_estimate(const PolicyState& p, std::span<const double> obs);
ActionSample sample_action(const PolicyState& p, std::span<const double> obs, Rng& rng);

// On-policy rollout of fixed capacity, consumed once per iteration.
struct RolloutBuffer {
    std::vector<std::vector<double>> obs;
    std::vector<std::vector<double>> next_obs;
    std::vector<int> actions;
    std::vector<double> log_probs;
    std::vector<double> values;
    std::vector<double> r_ext;
    std::vector<double> r_int_raw;
    std::vector<double> r_int_norm;
    std::vector<double> r_total;
    std::vector<unsigned char> dones;
    double bootstrap_value = 0.0; // V(s_T) when the last transition is not terminal

    std::size_t size() const { return obs.size(); }
    void clear();
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns; // advantages + values
};

// Generalized advantage estimation over r_total with (gamma, lambda);
// episode boundaries cut the recursion, the tail bootstraps on
// `bootstrap_value`.
GaeResult compute_gae(const RolloutBuffer& buffer, const PpoConfig& cfg);

// in-place shift/scale to mean 0, std 1
void normalize_advantages(std::vector<double>& adv);

// Raised when training produces non-finite logits; carries a checkpoint of
// the run state for post-mortem.
struct NanAbort : std::runtime_error {
    NanAbort(const std::string& msg, nlohmann::json state_)
        : std::runtime_error(msg), state(std::move(state_)) {}
    nlohmann::json state;
};

struct PpoUpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

// Clipped-surrogate update. `advantages` must already be normalized; ratios
// are taken against the rollout-time log-probs.
PpoUpdateStats ppo_update(PolicyState& policy, const RolloutBuffer& buffer,
                          const std::vector<double>& advantages,
                          const std::vector<double>& returns, const PpoConfig& cfg, Rng& rng);

struct TrainHooks {
    std::function<void(int iteration, TrainPhase)> on_phase;
};

std::unique_ptr<Env> make_env(const RunConfig& cfg);
std::unique_ptr<CuriosityModule> make_curiosity_module(const RunConfig& cfg, int obs_dim,
                                                       int num_actions, std::uint64_t seed);

// One seeded training run: rollout, intrinsic rewards, reward mixing, learner
// update, memory consolidation, policy update, per-iteration metrics.
MetricsLog train_loop(const RunConfig& cfg, std::uint64_t seed, const TrainHooks* hooks = nullptr);

} // namespace dymecu
