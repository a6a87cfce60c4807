#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dymecu/mlp.hpp"
#include "dymecu/optim.hpp"
#include "dymecu/rng.hpp"
#include "dymecu/running_stat.hpp"

namespace dymecu {

// ||z1 - z2||^2; the gap between the two learners' encodings of one state.
double intrinsic_reward(std::span<const double> z1, std::span<const double> z2);

// (||z1 - zw||^2, ||z2 - zw||^2): each learner's regression loss against the
// memory encoding.
std::pair<double, double> learner_losses(std::span<const double> z1, std::span<const double> z2,
                                         std::span<const double> zw);

// Batch of transitions handed to a curiosity module. Rewards are functions of
// `states`; ICM additionally consumes actions and next states, Disagreement
// consumes actions.
struct StateBatch {
    std::span<const std::vector<double>> states;
    std::span<const int> actions = {};
    std::span<const std::vector<double>> next_states = {};
};

enum class TrainPhase { rollout, rewards, learner_update, memory_update, policy_update };

using PhaseCallback = std::function<void(TrainPhase)>;

struct UpdateInfo {
    double loss1 = 0.0; // first learner / predictor / mean member loss
    double loss2 = 0.0; // second learner (0 when not applicable)
};

// Common face of every intrinsic-reward generator: emit raw rewards for a
// batch, update internal networks on it, expose a serializable checkpoint.
class CuriosityModule {
public:
    virtual ~CuriosityModule() = default;

    virtual std::string kind() const = 0;
    virtual std::vector<double> raw_rewards(const StateBatch& batch) = 0;
    virtual UpdateInfo update(const StateBatch& batch, const PhaseCallback* phase = nullptr) = 0;
    virtual nlohmann::json checkpoint() const = 0;

    // Updates the running scale with `raw` and returns the normalized value
    // (raw / (rms + 1e-8)); the identity when normalization is off.
    double normalize_reward(double raw);

    bool normalization_enabled() const { return normalize_; }
    const RunningStat& reward_stat() const { return reward_stat_; }
    void set_reward_stat(const RunningStat& s) { reward_stat_ = s; }

protected:
    explicit CuriosityModule(bool normalize) : normalize_(normalize) {}

    bool normalize_ = true;
    RunningStat reward_stat_;
};

enum class DyMeCuVariant { dual, one_learner, predictor_heads };
enum class OmegaInit { seeded, learner_average };
// which learners feed the EMA consolidation (the one-source ablation)
enum class MemorySource { both, learner1, learner2 };

std::string to_string(DyMeCuVariant v);

struct DyMeCuConfig {
    MlpSpec encoder;                        // memory network architecture
    DyMeCuVariant variant = DyMeCuVariant::dual;
    std::vector<int> extra_hidden;          // predictor_heads: appended learner layers
    double alpha = 0.99;                    // memory decay rate
    double lr = 1e-3;                       // 0 freezes the learners
    OptMode opt = OptMode::adam;
    OmegaInit omega_init = OmegaInit::seeded;
    MemorySource memory_update = MemorySource::both;
    bool normalize = true;
    int minibatch = 256;                    // update() slice size
};

struct Encodings {
    LatentState z1;
    LatentState z2; // empty for the one-learner variant
    LatentState zw;
};

// Dynamic-memory curiosity: dual online learners regressed toward an EMA
// memory network; their output gap is the intrinsic reward. Learner seeds are
// (seed, seed+1), the memory seed is seed+2.
class DyMeCu : public CuriosityModule {
public:
    DyMeCu(DyMeCuConfig cfg, std::uint64_t seed);

    std::string kind() const override;
    std::vector<double> raw_rewards(const StateBatch& batch) override;
    UpdateInfo update(const StateBatch& batch, const PhaseCallback* phase = nullptr) override;
    nlohmann::json checkpoint() const override;
    static std::unique_ptr<DyMeCu> from_checkpoint(const nlohmann::json& j);

    // (z1, z2, zw) for one state; z2 empty in the one-learner variant
    Encodings encode_all(std::span<const double> s) const;

    // raw reward of a single state: ||z1 - z2||^2 (dual) or ||z1 - zw||^2
    // (one-learner; errors on a dual configuration via one_learner_reward)
    double raw_reward(std::span<const double> s) const;
    double one_learner_reward(std::span<const double> s) const;

    // One optimizer step per learner on the mean batch loss; the memory
    // encoding is a constant target. Returns the pre-update mean losses.
    std::pair<double, double> update_learners(std::span<const std::vector<double>> states);

    // omega <- alpha * omega + (1 - alpha) * mean(learners)
    void consolidate_memory();

    // omega <- alpha * omega + (1 - alpha) * theta_which  (dual state only)
    enum class Learner { learner1, learner2 };
    void consolidate_memory_one_source(Learner which);

    // Deeper-learner ablation: appends extra trainable layers to each
    // learner; the memory keeps the base architecture and consolidates the
    // base-encoder prefix of each learner.
    DyMeCu with_predictor_heads(const std::vector<int>& extra_hidden) const;

    DyMeCuVariant variant() const { return cfg_.variant; }
    MemorySource memory_update() const { return cfg_.memory_update; }
    double alpha() const { return cfg_.alpha; }
    const MlpSpec& memory_spec() const { return memory_spec_; }
    const MlpSpec& learner_spec() const { return learner_spec_; }
    ParamVector& theta1() { return theta1_; }
    ParamVector& theta2() { return theta2_; }
    ParamVector& omega() { return omega_; }
    const ParamVector& theta1() const { return theta1_; }
    const ParamVector& theta2() const { return theta2_; }
    const ParamVector& omega() const { return omega_; }

private:
    explicit DyMeCu(DyMeCuConfig cfg); // uninitialized params; used by loaders

    bool dual() const { return cfg_.variant != DyMeCuVariant::one_learner; }
    // base-encoder slice of a learner's parameters, laid out like omega
    ParamVector base_slice(const ParamVector& learner) const;

    DyMeCuConfig cfg_;
    MlpSpec memory_spec_;
    MlpSpec learner_spec_;
    ParamVector theta1_;
    ParamVector theta2_;
    ParamVector omega_;
    OptState opt1_;
    OptState opt2_;
};

// Inert module for intrinsic-free runs: every reward is 0, updates are no-ops.
class NoCuriosity : public CuriosityModule {
public:
    NoCuriosity() : CuriosityModule(false) {}
    std::string kind() const override { return "none"; }
    std::vector<double> raw_rewards(const StateBatch& batch) override {
        return std::vector<double>(batch.states.size(), 0.0);
    }
    UpdateInfo update(const StateBatch&, const PhaseCallback* = nullptr) override { return {}; }
    nlohmann::json checkpoint() const override { return nlohmann::json{{"kind", "none"}}; }
};

} // namespace dymecu
