#include "dymecu/curiosity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dymecu/checkpoint.hpp"

namespace dymecu {

double intrinsic_reward(std::span<const double> z1, std::span<const double> z2) {
    if (z1.size() != z2.size())
        throw std::invalid_argument("intrinsic_reward: latent length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < z1.size(); ++i) {
        const double d = z1[i] - z2[i];
        acc += d * d;
    }
    return acc;
}

std::pair<double, double> learner_losses(std::span<const double> z1, std::span<const double> z2,
                                         std::span<const double> zw) {
    if (z1.size() != zw.size() || z2.size() != zw.size())
        throw std::invalid_argument("learner_losses: latent length mismatch");
    return {intrinsic_reward(z1, zw), intrinsic_reward(z2, zw)};
}

double CuriosityModule::normalize_reward(double raw) {
    reward_stat_.push(raw);
    if (!normalize_) return raw;
    return raw / (reward_stat_.rms() + 1e-8);
}

std::string to_string(DyMeCuVariant v) {
    switch (v) {
        case DyMeCuVariant::dual: return "dual";
        case DyMeCuVariant::one_learner: return "one_learner";
        case DyMeCuVariant::predictor_heads: return "predictor_heads";
    }
    return "dual";
}

namespace {

MlpSpec deepen(const MlpSpec& base, const std::vector<int>& extra_hidden) {
    // base output becomes an activated hidden layer feeding the appended
    // head, which maps back to the same latent dimension
    MlpSpec deep = base;
    deep.hidden_dims.push_back(base.output_dim);
    deep.hidden_dims.insert(deep.hidden_dims.end(), extra_hidden.begin(), extra_hidden.end());
    return deep;
}

} // namespace

DyMeCu::DyMeCu(DyMeCuConfig cfg) : CuriosityModule(cfg.normalize), cfg_(std::move(cfg)) {
    if (!(cfg_.alpha >= 0.0 && cfg_.alpha <= 1.0))
        throw std::invalid_argument("DyMeCu: alpha must lie in [0, 1]");
    if (cfg_.lr < 0.0) throw std::invalid_argument("DyMeCu: lr must be >= 0");
    if (cfg_.variant == DyMeCuVariant::predictor_heads && cfg_.extra_hidden.empty())
        throw std::invalid_argument("DyMeCu: predictor_heads requires non-empty extra_hidden");
    memory_spec_ = cfg_.encoder;
    learner_spec_ = cfg_.variant == DyMeCuVariant::predictor_heads
                        ? deepen(memory_spec_, cfg_.extra_hidden)
                        : memory_spec_;
    if (learner_spec_.output_dim != memory_spec_.output_dim)
        throw std::invalid_argument("DyMeCu: learner output dimension does not match memory");
}

DyMeCu::DyMeCu(DyMeCuConfig cfg, std::uint64_t seed) : DyMeCu(std::move(cfg)) {
    theta1_ = init_params(learner_spec_, seed);
    theta2_ = init_params(learner_spec_, seed + 1);
    if (theta1_.values == theta2_.values)
        throw std::logic_error("DyMeCu: learners initialized identically");
    if (cfg_.omega_init == OmegaInit::seeded) {
        omega_ = init_params(memory_spec_, seed + 2);
    } else {
        omega_ = zero_params(memory_spec_);
        const ParamVector b1 = base_slice(theta1_);
        const ParamVector b2 = base_slice(theta2_);
        omega_ = ema_blend(omega_, {&b1, &b2}, 0.0); // mean of the learners
    }
    opt1_ = cfg_.opt == OptMode::adam ? make_adam() : make_sgd();
    opt2_ = opt1_;
}

std::string DyMeCu::kind() const {
    switch (cfg_.variant) {
        case DyMeCuVariant::one_learner: return "dymecu_one_learner";
        case DyMeCuVariant::predictor_heads: return "dymecu_predictor_heads";
        default: return "dymecu";
    }
}

Encodings DyMeCu::encode_all(std::span<const double> s) const {
    Encodings e;
    e.z1 = forward(learner_spec_, theta1_, s);
    if (dual()) e.z2 = forward(learner_spec_, theta2_, s);
    e.zw = forward(memory_spec_, omega_, s);
    return e;
}

double DyMeCu::raw_reward(std::span<const double> s) const {
    if (!dual()) return one_learner_reward(s);
    const auto e = encode_all(s);
    return intrinsic_reward(e.z1, e.z2);
}

double DyMeCu::one_learner_reward(std::span<const double> s) const {
    if (dual())
        throw std::invalid_argument("one_learner_reward: module is configured with dual learners");
    const auto z = forward(learner_spec_, theta1_, s);
    const auto zw = forward(memory_spec_, omega_, s);
    return intrinsic_reward(z, zw);
}

std::vector<double> DyMeCu::raw_rewards(const StateBatch& batch) {
    std::vector<double> out;
    out.reserve(batch.states.size());
    for (const auto& s : batch.states) out.push_back(raw_reward(s));
    return out;
}

std::pair<double, double> DyMeCu::update_learners(std::span<const std::vector<double>> states) {
    if (states.empty()) throw std::invalid_argument("update_learners: empty batch");

    const double inv_b = 1.0 / static_cast<double>(states.size());
    ParamVector g1 = zero_params(learner_spec_);
    ParamVector g2 = dual() ? zero_params(learner_spec_) : ParamVector{};
    double loss1 = 0.0, loss2 = 0.0;
    std::vector<double> upstream(static_cast<std::size_t>(learner_spec_.output_dim));

    for (const auto& s : states) {
        const auto zw = forward(memory_spec_, omega_, s); // constant target

        const auto z1 = forward(learner_spec_, theta1_, s);
        for (std::size_t i = 0; i < upstream.size(); ++i) {
            const double d = z1[i] - zw[i];
            loss1 += d * d * inv_b;
            upstream[i] = 2.0 * (z1[i] - zw[i]) * inv_b;
        }
        backward_into(learner_spec_, theta1_, s, upstream, g1);

        if (dual()) {
            const auto z2 = forward(learner_spec_, theta2_, s);
            for (std::size_t i = 0; i < upstream.size(); ++i) {
                const double d = z2[i] - zw[i];
                loss2 += d * d * inv_b;
                upstream[i] = 2.0 * (z2[i] - zw[i]) * inv_b;
            }
            backward_into(learner_spec_, theta2_, s, upstream, g2);
        }
    }

    if (cfg_.lr > 0.0) {
        optimizer_step(theta1_, g1, opt1_, cfg_.lr);
        if (dual()) optimizer_step(theta2_, g2, opt2_, cfg_.lr);
    }
    return {loss1, loss2};
}

ParamVector DyMeCu::base_slice(const ParamVector& learner) const {
    if (learner.layout == omega_.layout) return learner;
    ParamVector base;
    base.layout = omega_.layout;
    const std::size_t n = base.layout.total();
    base.values.assign(learner.values.begin(),
                       learner.values.begin() + static_cast<std::ptrdiff_t>(n));
    return base;
}

void DyMeCu::consolidate_memory() {
    if (dual()) {
        const ParamVector b1 = base_slice(theta1_);
        const ParamVector b2 = base_slice(theta2_);
        omega_ = ema_blend(omega_, {&b1, &b2}, cfg_.alpha);
    } else {
        omega_ = ema_blend(omega_, {&theta1_}, cfg_.alpha);
    }
}

void DyMeCu::consolidate_memory_one_source(Learner which) {
    if (!dual())
        throw std::invalid_argument(
            "consolidate_memory_one_source: requires a dual-learner state");
    const ParamVector b = base_slice(which == Learner::learner1 ? theta1_ : theta2_);
    omega_ = ema_blend(omega_, {&b}, cfg_.alpha);
}

UpdateInfo DyMeCu::update(const StateBatch& batch, const PhaseCallback* phase) {
    if (batch.states.empty()) throw std::invalid_argument("DyMeCu::update: empty batch");
    const std::size_t b = batch.states.size();
    const std::size_t mb = cfg_.minibatch > 0 ? static_cast<std::size_t>(cfg_.minibatch) : b;
    UpdateInfo info;
    std::size_t slices = 0;
    for (std::size_t off = 0; off < b; off += mb) {
        const std::size_t len = std::min(mb, b - off);
        const auto [l1, l2] = update_learners(batch.states.subspan(off, len));
        if (phase && *phase) (*phase)(TrainPhase::learner_update);
        switch (cfg_.memory_update) {
            case MemorySource::both: consolidate_memory(); break;
            case MemorySource::learner1: consolidate_memory_one_source(Learner::learner1); break;
            case MemorySource::learner2: consolidate_memory_one_source(Learner::learner2); break;
        }
        if (phase && *phase) (*phase)(TrainPhase::memory_update);
        info.loss1 += l1;
        info.loss2 += l2;
        ++slices;
    }
    info.loss1 /= static_cast<double>(slices);
    info.loss2 /= static_cast<double>(slices);
    return info;
}

DyMeCu DyMeCu::with_predictor_heads(const std::vector<int>& extra_hidden) const {
    if (extra_hidden.empty())
        throw std::invalid_argument("with_predictor_heads: extra_hidden must be non-empty");
    if (cfg_.variant != DyMeCuVariant::dual)
        throw std::invalid_argument("with_predictor_heads: requires the dual variant");

    DyMeCuConfig cfg = cfg_;
    cfg.variant = DyMeCuVariant::predictor_heads;
    cfg.extra_hidden = extra_hidden;
    DyMeCu deep(cfg);

    // carry the trained base encoders into the prefix; seed fresh head layers
    // from a hash of the existing parameters so the result stays deterministic
    const std::uint64_t head_seed =
        0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(theta1_.values.size());
    deep.theta1_ = init_params(deep.learner_spec_, head_seed);
    deep.theta2_ = init_params(deep.learner_spec_, head_seed + 1);
    std::copy(theta1_.values.begin(), theta1_.values.end(), deep.theta1_.values.begin());
    std::copy(theta2_.values.begin(), theta2_.values.end(), deep.theta2_.values.begin());
    deep.omega_ = omega_;
    deep.opt1_ = cfg.opt == OptMode::adam ? make_adam() : make_sgd();
    deep.opt2_ = deep.opt1_;
    deep.normalize_ = normalize_;
    deep.reward_stat_ = reward_stat_;
    return deep;
}

nlohmann::json DyMeCu::checkpoint() const {
    nlohmann::json j;
    j["kind"] = kind();
    j["variant"] = to_string(cfg_.variant);
    j["alpha"] = cfg_.alpha;
    j["lr"] = cfg_.lr;
    j["opt"] = cfg_.opt == OptMode::adam ? "adam" : "sgd";
    j["memory_update"] = cfg_.memory_update == MemorySource::both
                             ? "both"
                             : (cfg_.memory_update == MemorySource::learner1 ? "learner1"
                                                                             : "learner2");
    j["minibatch"] = cfg_.minibatch;
    j["normalize"] = normalize_;
    j["encoder"] = detail::spec_to_json(memory_spec_);
    j["extra_hidden"] = cfg_.extra_hidden;
    j["theta1"] = detail::params_to_json(theta1_);
    j["theta2"] = detail::params_to_json(theta2_);
    j["omega"] = detail::params_to_json(omega_);
    j["opt1"] = detail::opt_to_json(opt1_);
    j["opt2"] = detail::opt_to_json(opt2_);
    j["reward_stat"] = detail::stat_to_json(reward_stat_);
    return j;
}

std::unique_ptr<DyMeCu> DyMeCu::from_checkpoint(const nlohmann::json& j) {
    DyMeCuConfig cfg;
    cfg.encoder = detail::spec_from_json(j.at("encoder"));
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "dual") cfg.variant = DyMeCuVariant::dual;
    else if (variant == "one_learner") cfg.variant = DyMeCuVariant::one_learner;
    else if (variant == "predictor_heads") cfg.variant = DyMeCuVariant::predictor_heads;
    else throw std::invalid_argument("checkpoint: unknown variant '" + variant + "'");
    cfg.alpha = j.at("alpha").get<double>();
    cfg.lr = j.at("lr").get<double>();
    cfg.opt = j.at("opt").get<std::string>() == "sgd" ? OptMode::sgd : OptMode::adam;
    const std::string mu = j.at("memory_update").get<std::string>();
    cfg.memory_update = mu == "both" ? MemorySource::both
                                     : (mu == "learner1" ? MemorySource::learner1
                                                         : MemorySource::learner2);
    cfg.minibatch = j.at("minibatch").get<int>();
    cfg.normalize = j.at("normalize").get<bool>();
    cfg.extra_hidden = j.at("extra_hidden").get<std::vector<int>>();

    auto m = std::unique_ptr<DyMeCu>(new DyMeCu(cfg));
    m->theta1_ = detail::params_from_json(j.at("theta1"));
    m->theta2_ = detail::params_from_json(j.at("theta2"));
    m->omega_ = detail::params_from_json(j.at("omega"));
    m->opt1_ = detail::opt_from_json(j.at("opt1"));
    m->opt2_ = detail::opt_from_json(j.at("opt2"));
    m->set_reward_stat(detail::stat_from_json(j.at("reward_stat")));
    if (!(m->theta1_.layout == m->learner_spec_.layout()) ||
        !(m->theta2_.layout == m->learner_spec_.layout()) ||
        !(m->omega_.layout == m->memory_spec_.layout()))
        throw std::invalid_argument("checkpoint: parameter layout does not match encoder spec");
    return m;
}

} // namespace dymecu
