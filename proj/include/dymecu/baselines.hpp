#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dymecu/curiosity.hpp"

namespace dymecu {

// Random network distillation: a frozen random target network and a trained
// predictor; novelty is the distillation error.
struct RndConfig {
    MlpSpec encoder;
    double lr = 1e-3;
    bool normalize = true;
    int minibatch = 256;
};

class Rnd : public CuriosityModule {
public:
    Rnd(RndConfig cfg, std::uint64_t seed);

    std::string kind() const override { return "rnd"; }
    std::vector<double> raw_rewards(const StateBatch& batch) override;
    UpdateInfo update(const StateBatch& batch, const PhaseCallback* phase = nullptr) override;
    nlohmann::json checkpoint() const override;
    static std::unique_ptr<Rnd> from_checkpoint(const nlohmann::json& j);

    // ||predictor(s) - target(s)||^2
    double raw_reward(std::span<const double> s) const;

    const ParamVector& target() const { return target_; }
    ParamVector& predictor() { return predictor_; }

private:
    explicit Rnd(RndConfig cfg);

    RndConfig cfg_;
    ParamVector target_; // never updated
    ParamVector predictor_;
    OptState opt_;
};

// Forward/inverse dynamics curiosity: reward is the forward model's error in
// latent space; the encoder is shaped by both the inverse and forward losses.
struct IcmConfig {
    MlpSpec encoder;
    int action_dim = 0;
    std::vector<int> forward_hidden = {64};
    std::vector<int> inverse_hidden = {64};
    double lr = 1e-3;
    double forward_loss_weight = 0.2; // inverse loss gets the complement
    bool normalize = true;
    int minibatch = 256;
};

class Icm : public CuriosityModule {
public:
    Icm(IcmConfig cfg, std::uint64_t seed);

    std::string kind() const override { return "icm"; }
    std::vector<double> raw_rewards(const StateBatch& batch) override;
    UpdateInfo update(const StateBatch& batch, const PhaseCallback* phase = nullptr) override;
    nlohmann::json checkpoint() const override;
    static std::unique_ptr<Icm> from_checkpoint(const nlohmann::json& j);

    // ||forward(encode(s), a) - encode(s_next)||^2; `a` is an action index
    // checked against the configured arity
    double raw_reward(std::span<const double> s, int a, std::span<const double> s_next) const;

    const MlpSpec& encoder_spec() const { return enc_spec_; }
    ParamVector& encoder() { return enc_; }
    ParamVector& forward_model() { return fwd_; }

private:
    explicit Icm(IcmConfig cfg);
    std::vector<double> forward_input(std::span<const double> latent, int a) const;

    IcmConfig cfg_;
    MlpSpec enc_spec_, fwd_spec_, inv_spec_;
    ParamVector enc_, fwd_, inv_;
    OptState enc_opt_, fwd_opt_, inv_opt_;
};

// Ensemble disagreement: K forward models over frozen random features;
// reward is the mean per-dimension variance of their predictions.
struct DisagreementConfig {
    MlpSpec encoder;
    int action_dim = 0;
    std::vector<int> model_hidden = {64};
    int ensemble = 5; // K >= 2
    double lr = 1e-3;
    bool normalize = true;
    int minibatch = 256;
};

class Disagreement : public CuriosityModule {
public:
    Disagreement(DisagreementConfig cfg, std::uint64_t seed);

    std::string kind() const override { return "disagreement"; }
    std::vector<double> raw_rewards(const StateBatch& batch) override;
    UpdateInfo update(const StateBatch& batch, const PhaseCallback* phase = nullptr) override;
    nlohmann::json checkpoint() const override;
    static std::unique_ptr<Disagreement> from_checkpoint(const nlohmann::json& j);

    double raw_reward(std::span<const double> s, int a) const;

    int ensemble_size() const { return static_cast<int>(members_.size()); }
    std::vector<ParamVector>& members() { return members_; }

private:
    explicit Disagreement(DisagreementConfig cfg);
    std::vector<double> model_input(std::span<const double> s, int a) const;

    DisagreementConfig cfg_;
    MlpSpec enc_spec_, model_spec_;
    ParamVector enc_; // frozen random projection
    std::vector<ParamVector> members_;
    std::vector<OptState> opts_;
    Rng boot_rng_; // per-member bootstrap resampling
};

// 64-bit FNV-1a over the parameter bytes; used to verify frozen networks.
std::uint64_t param_checksum(const ParamVector& p);

} // namespace dymecu
