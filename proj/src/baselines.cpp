#include "dymecu/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dymecu/checkpoint.hpp"

namespace dymecu {

using nlohmann::json;

std::uint64_t param_checksum(const ParamVector& p) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (double d : p.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffu;
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

namespace {

void check_dim(std::span<const double> s, int expected, const char* who) {
    if (static_cast<int>(s.size()) != expected)
        throw std::invalid_argument(std::string(who) + ": observation dimension mismatch");
}

} // namespace

// ---------------------------------------------------------------- Rnd

Rnd::Rnd(RndConfig cfg) : CuriosityModule(cfg.normalize), cfg_(std::move(cfg)) {}

Rnd::Rnd(RndConfig cfg, std::uint64_t seed) : Rnd(std::move(cfg)) {
    target_ = init_params(cfg_.encoder, seed);
    predictor_ = init_params(cfg_.encoder, seed + 1);
    opt_ = make_adam();
}

double Rnd::raw_reward(std::span<const double> s) const {
    check_dim(s, cfg_.encoder.input_dim, "rnd_reward");
    const auto zp = forward(cfg_.encoder, predictor_, s);
    const auto zt = forward(cfg_.encoder, target_, s);
    return intrinsic_reward(zp, zt);
}

std::vector<double> Rnd::raw_rewards(const StateBatch& batch) {
    std::vector<double> out;
    out.reserve(batch.states.size());
    for (const auto& s : batch.states) out.push_back(raw_reward(s));
    return out;
}

UpdateInfo Rnd::update(const StateBatch& batch, const PhaseCallback* phase) {
    if (batch.states.empty()) throw std::invalid_argument("Rnd::update: empty batch");
    const std::size_t b = batch.states.size();
    const std::size_t mb = cfg_.minibatch > 0 ? static_cast<std::size_t>(cfg_.minibatch) : b;
    UpdateInfo info;
    std::size_t slices = 0;
    std::vector<double> upstream(static_cast<std::size_t>(cfg_.encoder.output_dim));
    for (std::size_t off = 0; off < b; off += mb) {
        const std::size_t len = std::min(mb, b - off);
        const double inv_b = 1.0 / static_cast<double>(len);
        ParamVector g = zero_params(cfg_.encoder);
        double loss = 0.0;
        for (std::size_t i = off; i < off + len; ++i) {
            const auto& s = batch.states[i];
            const auto zt = forward(cfg_.encoder, target_, s);
            const auto zp = forward(cfg_.encoder, predictor_, s);
            for (std::size_t k = 0; k < upstream.size(); ++k) {
                const double d = zp[k] - zt[k];
                loss += d * d * inv_b;
                upstream[k] = 2.0 * d * inv_b;
            }
            backward_into(cfg_.encoder, predictor_, s, upstream, g);
        }
        if (cfg_.lr > 0.0) optimizer_step(predictor_, g, opt_, cfg_.lr);
        if (phase && *phase) (*phase)(TrainPhase::learner_update);
        info.loss1 += loss;
        ++slices;
    }
    info.loss1 /= static_cast<double>(slices);
    return info;
}

json Rnd::checkpoint() const {
    json j;
    j["kind"] = kind();
    j["lr"] = cfg_.lr;
    j["minibatch"] = cfg_.minibatch;
    j["normalize"] = normalize_;
    j["encoder"] = detail::spec_to_json(cfg_.encoder);
    j["target"] = detail::params_to_json(target_);
    j["predictor"] = detail::params_to_json(predictor_);
    j["opt"] = detail::opt_to_json(opt_);
    j["reward_stat"] = detail::stat_to_json(reward_stat_);
    return j;
}

std::unique_ptr<Rnd> Rnd::from_checkpoint(const json& j) {
    RndConfig cfg;
    cfg.encoder = detail::spec_from_json(j.at("encoder"));
    cfg.lr = j.at("lr").get<double>();
    cfg.minibatch = j.at("minibatch").get<int>();
    cfg.normalize = j.at("normalize").get<bool>();
    auto m = std::unique_ptr<Rnd>(new Rnd(cfg));
    m->target_ = detail::params_from_json(j.at("target"));
    m->predictor_ = detail::params_from_json(j.at("predictor"));
    m->opt_ = detail::opt_from_json(j.at("opt"));
    m->set_reward_stat(detail::stat_from_json(j.at("reward_stat")));
    return m;
}

// ---------------------------------------------------------------- Icm

Icm::Icm(IcmConfig cfg) : CuriosityModule(cfg.normalize), cfg_(std::move(cfg)) {
    if (cfg_.action_dim < 1) throw std::invalid_argument("Icm: action_dim must be >= 1");
    enc_spec_ = cfg_.encoder;
    fwd_spec_ = MlpSpec{enc_spec_.output_dim + cfg_.action_dim, cfg_.forward_hidden,
                        enc_spec_.output_dim, enc_spec_.activation};
    inv_spec_ = MlpSpec{2 * enc_spec_.output_dim, cfg_.inverse_hidden, cfg_.action_dim,
                        enc_spec_.activation};
}

Icm::Icm(IcmConfig cfg, std::uint64_t seed) : Icm(std::move(cfg)) {
    enc_ = init_params(enc_spec_, seed);
    fwd_ = init_params(fwd_spec_, seed + 1);
    inv_ = init_params(inv_spec_, seed + 2);
    enc_opt_ = make_adam();
    fwd_opt_ = make_adam();
    inv_opt_ = make_adam();
}

std::vector<double> Icm::forward_input(std::span<const double> latent, int a) const {
    if (a < 0 || a >= cfg_.action_dim)
        throw std::invalid_argument("icm: action index out of range for configured arity");
    std::vector<double> in(latent.begin(), latent.end());
    in.resize(latent.size() + static_cast<std::size_t>(cfg_.action_dim), 0.0);
    in[latent.size() + static_cast<std::size_t>(a)] = 1.0;
    return in;
}

double Icm::raw_reward(std::span<const double> s, int a, std::span<const double> s_next) const {
    check_dim(s, enc_spec_.input_dim, "icm_reward");
    check_dim(s_next, enc_spec_.input_dim, "icm_reward");
    const auto zs = forward(enc_spec_, enc_, s);
    const auto zn = forward(enc_spec_, enc_, s_next);
    const auto pred = forward(fwd_spec_, fwd_, forward_input(zs, a));
    return intrinsic_reward(pred, zn);
}

std::vector<double> Icm::raw_rewards(const StateBatch& batch) {
    if (batch.actions.size() != batch.states.size() ||
        batch.next_states.size() != batch.states.size())
        throw std::invalid_argument("icm: batch requires states, actions and next states");
    std::vector<double> out;
    out.reserve(batch.states.size());
    for (std::size_t i = 0; i < batch.states.size(); ++i)
        out.push_back(raw_reward(batch.states[i], batch.actions[i], batch.next_states[i]));
    return out;
}

UpdateInfo Icm::update(const StateBatch& batch, const PhaseCallback* phase) {
    if (batch.states.empty()) throw std::invalid_argument("Icm::update: empty batch");
    if (batch.actions.size() != batch.states.size() ||
        batch.next_states.size() != batch.states.size())
        throw std::invalid_argument("icm: batch requires states, actions and next states");

    const double wf = cfg_.forward_loss_weight;
    const double wi = 1.0 - wf;
    const int latent = enc_spec_.output_dim;
    const std::size_t b = batch.states.size();
    const std::size_t mb = cfg_.minibatch > 0 ? static_cast<std::size_t>(cfg_.minibatch) : b;

    UpdateInfo info;
    std::size_t slices = 0;
    for (std::size_t off = 0; off < b; off += mb) {
        const std::size_t len = std::min(mb, b - off);
        const double inv_b = 1.0 / static_cast<double>(len);
        ParamVector genc = zero_params(enc_spec_);
        ParamVector gfwd = zero_params(fwd_spec_);
        ParamVector ginv = zero_params(inv_spec_);
        double loss_fwd = 0.0, loss_inv = 0.0;

        for (std::size_t i = off; i < off + len; ++i) {
            const auto& s = batch.states[i];
            const auto& sn = batch.next_states[i];
            const int a = batch.actions[i];

            const auto zs = forward(enc_spec_, enc_, s);
            const auto zn = forward(enc_spec_, enc_, sn);
            const auto fin = forward_input(zs, a);
            const auto pred = forward(fwd_spec_, fwd_, fin);

            // forward dynamics loss and its gradient through pred
            std::vector<double> up_fwd(static_cast<std::size_t>(latent));
            for (int k = 0; k < latent; ++k) {
                const double d = pred[k] - zn[k];
                loss_fwd += d * d * inv_b;
                up_fwd[k] = wf * 2.0 * d * inv_b;
            }
            std::vector<double> fwd_in_grad;
            backward_into(fwd_spec_, fwd_, fin, up_fwd, gfwd, &fwd_in_grad);

            // inverse model: softmax cross-entropy on the taken action
            std::vector<double> iin(zs.begin(), zs.end());
            iin.insert(iin.end(), zn.begin(), zn.end());
            const auto logits = forward(inv_spec_, inv_, iin);
            double mx = logits[0];
            for (double v : logits) mx = std::max(mx, v);
            double z = 0.0;
            for (double v : logits) z += std::exp(v - mx);
            const double log_z = std::log(z) + mx;
            loss_inv += (log_z - logits[static_cast<std::size_t>(a)]) * inv_b;
            std::vector<double> up_inv(logits.size());
            for (std::size_t k = 0; k < logits.size(); ++k) {
                const double p = std::exp(logits[k] - log_z);
                up_inv[k] = wi * (p - (static_cast<int>(k) == a ? 1.0 : 0.0)) * inv_b;
            }
            std::vector<double> inv_in_grad;
            backward_into(inv_spec_, inv_, iin, up_inv, ginv, &inv_in_grad);

            // chain every path into the encoder:
            //   zs: forward-model input + inverse input (first half)
            //   zn: forward-loss target + inverse input (second half)
            std::vector<double> up_zs(static_cast<std::size_t>(latent));
            std::vector<double> up_zn(static_cast<std::size_t>(latent));
            for (int k = 0; k < latent; ++k) {
                up_zs[k] = fwd_in_grad[static_cast<std::size_t>(k)] +
                           inv_in_grad[static_cast<std::size_t>(k)];
                up_zn[k] = -up_fwd[static_cast<std::size_t>(k)] +
                           inv_in_grad[static_cast<std::size_t>(latent + k)];
            }
            backward_into(enc_spec_, enc_, s, up_zs, genc);
            backward_into(enc_spec_, enc_, sn, up_zn, genc);
        }

        if (cfg_.lr > 0.0) {
            optimizer_step(enc_, genc, enc_opt_, cfg_.lr);
            optimizer_step(fwd_, gfwd, fwd_opt_, cfg_.lr);
            optimizer_step(inv_, ginv, inv_opt_, cfg_.lr);
        }
        if (phase && *phase) (*phase)(TrainPhase::learner_update);
        info.loss1 += loss_fwd;
        info.loss2 += loss_inv;
        ++slices;
    }
    info.loss1 /= static_cast<double>(slices);
    info.loss2 /= static_cast<double>(slices);
    return info;
}

json Icm::checkpoint() const {
    json j;
    j["kind"] = kind();
    j["lr"] = cfg_.lr;
    j["minibatch"] = cfg_.minibatch;
    j["normalize"] = normalize_;
    j["action_dim"] = cfg_.action_dim;
    j["forward_loss_weight"] = cfg_.forward_loss_weight;
    j["encoder"] = detail::spec_to_json(enc_spec_);
    j["forward_hidden"] = cfg_.forward_hidden;
    j["inverse_hidden"] = cfg_.inverse_hidden;
    j["enc"] = detail::params_to_json(enc_);
    j["fwd"] = detail::params_to_json(fwd_);
    j["inv"] = detail::params_to_json(inv_);
    j["enc_opt"] = detail::opt_to_json(enc_opt_);
    j["fwd_opt"] = detail::opt_to_json(fwd_opt_);
    j["inv_opt"] = detail::opt_to_json(inv_opt_);
    j["reward_stat"] = detail::stat_to_json(reward_stat_);
    return j;
}

std::unique_ptr<Icm> Icm::from_checkpoint(const json& j) {
    IcmConfig cfg;
    cfg.encoder = detail::spec_from_json(j.at("encoder"));
    cfg.action_dim = j.at("action_dim").get<int>();
    cfg.forward_hidden = j.at("forward_hidden").get<std::vector<int>>();
    cfg.inverse_hidden = j.at("inverse_hidden").get<std::vector<int>>();
    cfg.lr = j.at("lr").get<double>();
    cfg.forward_loss_weight = j.at("forward_loss_weight").get<double>();
    cfg.minibatch = j.at("minibatch").get<int>();
    cfg.normalize = j.at("normalize").get<bool>();
    auto m = std::unique_ptr<Icm>(new Icm(cfg));
    m->enc_ = detail::params_from_json(j.at("enc"));
    m->fwd_ = detail::params_from_json(j.at("fwd"));
    m->inv_ = detail::params_from_json(j.at("inv"));
    m->enc_opt_ = detail::opt_from_json(j.at("enc_opt"));
    m->fwd_opt_ = detail::opt_from_json(j.at("fwd_opt"));
    m->inv_opt_ = detail::opt_from_json(j.at("inv_opt"));
    m->set_reward_stat(detail::stat_from_json(j.at("reward_stat")));
    return m;
}

// ---------------------------------------------------------------- Disagreement

Disagreement::Disagreement(DisagreementConfig cfg)
    : CuriosityModule(cfg.normalize), cfg_(std::move(cfg)), boot_rng_(0) {
    if (cfg_.ensemble < 2) throw std::invalid_argument("Disagreement: ensemble size K must be >= 2");
    if (cfg_.action_dim < 1) throw std::invalid_argument("Disagreement: action_dim must be >= 1");
    enc_spec_ = cfg_.encoder;
    model_spec_ = MlpSpec{enc_spec_.output_dim + cfg_.action_dim, cfg_.model_hidden,
                          enc_spec_.output_dim, enc_spec_.activation};
}

Disagreement::Disagreement(DisagreementConfig cfg, std::uint64_t seed)
    : Disagreement(std::move(cfg)) {
    enc_ = init_params(enc_spec_, seed);
    members_.reserve(static_cast<std::size_t>(cfg_.ensemble));
    for (int k = 0; k < cfg_.ensemble; ++k)
        members_.push_back(init_params(model_spec_, seed + 1 + static_cast<std::uint64_t>(k)));
    opts_.assign(members_.size(), make_adam());
    boot_rng_ = Rng(seed + 1000);
}

std::vector<double> Disagreement::model_input(std::span<const double> s, int a) const {
    if (a < 0 || a >= cfg_.action_dim)
        throw std::invalid_argument("disagreement: action index out of range");
    const auto z = forward(enc_spec_, enc_, s);
    std::vector<double> in(z.begin(), z.end());
    in.resize(z.size() + static_cast<std::size_t>(cfg_.action_dim), 0.0);
    in[z.size() + static_cast<std::size_t>(a)] = 1.0;
    return in;
}

double Disagreement::raw_reward(std::span<const double> s, int a) const {
    check_dim(s, enc_spec_.input_dim, "disagreement_reward");
    const auto in = model_input(s, a);
    const int latent = enc_spec_.output_dim;
    const std::size_t k = members_.size();
    std::vector<std::vector<double>> preds;
    preds.reserve(k);
    for (const auto& m : members_) preds.push_back(forward(model_spec_, m, in));

    // mean over latent dims of the population variance across members
    double acc = 0.0;
    for (int d = 0; d < latent; ++d) {
        double mean = 0.0;
        for (const auto& p : preds) mean += p[static_cast<std::size_t>(d)];
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (const auto& p : preds) {
            const double dd = p[static_cast<std::size_t>(d)] - mean;
            var += dd * dd;
        }
        acc += var / static_cast<double>(k);
    }
    return acc / static_cast<double>(latent);
}

std::vector<double> Disagreement::raw_rewards(const StateBatch& batch) {
    if (batch.actions.size() != batch.states.size())
        throw std::invalid_argument("disagreement: batch requires states and actions");
    std::vector<double> out;
    out.reserve(batch.states.size());
    for (std::size_t i = 0; i < batch.states.size(); ++i)
        out.push_back(raw_reward(batch.states[i], batch.actions[i]));
    return out;
}

UpdateInfo Disagreement::update(const StateBatch& batch, const PhaseCallback* phase) {
    if (batch.states.empty()) throw std::invalid_argument("Disagreement::update: empty batch");
    if (batch.actions.size() != batch.states.size() ||
        batch.next_states.size() != batch.states.size())
        throw std::invalid_argument("disagreement: batch requires states, actions and next states");

    const int latent = enc_spec_.output_dim;
    const std::size_t b = batch.states.size();
    const std::size_t mb = cfg_.minibatch > 0 ? static_cast<std::size_t>(cfg_.minibatch) : b;

    UpdateInfo info;
    std::size_t slices = 0;
    std::vector<double> upstream(static_cast<std::size_t>(latent));
    for (std::size_t off = 0; off < b; off += mb) {
        const std::size_t len = std::min(mb, b - off);
        const double inv_b = 1.0 / static_cast<double>(len);
        double loss_sum = 0.0;
        for (std::size_t k = 0; k < members_.size(); ++k) {
            ParamVector g = zero_params(model_spec_);
            double loss = 0.0;
            for (std::size_t n = 0; n < len; ++n) {
                // bootstrap resample of the slice, one draw per slot
                const std::size_t i = off + boot_rng_.below(len);
                const auto in = model_input(batch.states[i], batch.actions[i]);
                const auto zn = forward(enc_spec_, enc_, batch.next_states[i]);
                const auto pred = forward(model_spec_, members_[k], in);
                for (int d = 0; d < latent; ++d) {
                    const double diff = pred[static_cast<std::size_t>(d)] -
                                        zn[static_cast<std::size_t>(d)];
                    loss += diff * diff * inv_b;
                    upstream[static_cast<std::size_t>(d)] = 2.0 * diff * inv_b;
                }
                backward_into(model_spec_, members_[k], in, upstream, g);
            }
            if (cfg_.lr > 0.0) optimizer_step(members_[k], g, opts_[k], cfg_.lr);
            loss_sum += loss;
        }
        if (phase && *phase) (*phase)(TrainPhase::learner_update);
        info.loss1 += loss_sum / static_cast<double>(members_.size());
        ++slices;
    }
    info.loss1 /= static_cast<double>(slices);
    return info;
}

json Disagreement::checkpoint() const {
    json j;
    j["kind"] = kind();
    j["lr"] = cfg_.lr;
    j["minibatch"] = cfg_.minibatch;
    j["normalize"] = normalize_;
    j["action_dim"] = cfg_.action_dim;
    j["model_hidden"] = cfg_.model_hidden;
    j["ensemble"] = cfg_.ensemble;
    j["encoder"] = detail::spec_to_json(enc_spec_);
    j["enc"] = detail::params_to_json(enc_);
    json members = json::array();
    for (const auto& m : members_) members.push_back(detail::params_to_json(m));
    j["members"] = members;
    json opts = json::array();
    for (const auto& o : opts_) opts.push_back(detail::opt_to_json(o));
    j["opts"] = opts;
    j["reward_stat"] = detail::stat_to_json(reward_stat_);
    return j;
}

std::unique_ptr<Disagreement> Disagreement::from_checkpoint(const json& j) {
    DisagreementConfig cfg;
    cfg.encoder = detail::spec_from_json(j.at("encoder"));
    cfg.action_dim = j.at("action_dim").get<int>();
    cfg.model_hidden = j.at("model_hidden").get<std::vector<int>>();
    cfg.ensemble = j.at("ensemble").get<int>();
    cfg.lr = j.at("lr").get<double>();
    cfg.minibatch = j.at("minibatch").get<int>();
    cfg.normalize = j.at("normalize").get<bool>();
    auto m = std::unique_ptr<Disagreement>(new Disagreement(cfg));
    m->enc_ = detail::params_from_json(j.at("enc"));
    m->members_.clear();
    for (const auto& mm : j.at("members")) m->members_.push_back(detail::params_from_json(mm));
    m->opts_.clear();
    for (const auto& oo : j.at("opts")) m->opts_.push_back(detail::opt_from_json(oo));
    m->set_reward_stat(detail::stat_from_json(j.at("reward_stat")));
    return m;
}

} // namespace dymecu
