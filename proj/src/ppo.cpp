#include "dymecu/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "dymecu/baselines.hpp"
#include "dymecu/checkpoint.hpp"
#include "dymecu/config.hpp"
#include "dymecu/env.hpp"

namespace dymecu {

double total_reward(double r_int, double r_ext, const PpoConfig& cfg) {
    return cfg.zeta * r_int + cfg.beta * r_ext;
}

PolicyState make_policy(int obs_dim, int num_actions, const std::vector<int>& hidden,
                        std::uint64_t seed) {
    PolicyState p;
    p.policy_spec = MlpSpec{obs_dim, hidden, num_actions, Activation::tanh};
    p.value_spec = MlpSpec{obs_dim, hidden, 1, Activation::tanh};
    p.policy = init_params(p.policy_spec, seed);
    p.value = init_params(p.value_spec, seed + 1);
    p.policy_opt = make_adam();
    p.value_opt = make_adam();
    return p;
}

namespace {

void check_finite_logits(const std::vector<double>& logits) {
    for (double v : logits)
        if (!std::isfinite(v))
            throw NanAbort("non-finite policy logits encountered", nlohmann::json::object());
}

// log-softmax; returns logsumexp so callers can form probs and log-probs
double log_sum_exp(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    return std::log(z) + mx;
}

} // namespace

std::vector<double> policy_logits(const PolicyState& p, std::span<const double> obs) {
    auto logits = forward(p.policy_spec, p.policy, obs);
    check_finite_logits(logits);
    return logits;
}

double value_estimate(const PolicyState& p, std::span<const double> obs) {
    return forward(p.value_spec, p.value, obs)[0];
}

ActionSample sample_action(const PolicyState& p, std::span<const double> obs, Rng& rng) {
    const auto logits = policy_logits(p, obs);
    const double lse = log_sum_exp(logits);
    const double u = rng.uniform();
    double cum = 0.0;
    int action = static_cast<int>(logits.size()) - 1;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        cum += std::exp(logits[j] - lse);
        if (u < cum) {
            action = static_cast<int>(j);
            break;
        }
    }
    ActionSample a;
    a.action = action;
    a.log_prob = logits[static_cast<std::size_t>(action)] - lse;
    a.value = value_estimate(p, obs);
    return a;
}

void RolloutBuffer::clear() {
    obs.clear();
    next_obs.clear();
    actions.clear();
    log_probs.clear();
    values.clear();
    r_ext.clear();
    r_int_raw.clear();
    r_int_norm.clear();
    r_total.clear();
    dones.clear();
    bootstrap_value = 0.0;
}

GaeResult compute_gae(const RolloutBuffer& buffer, const PpoConfig& cfg) {
    const std::size_t n = buffer.size();
    if (n == 0) throw std::invalid_argument("compute_gae: empty buffer");
    if (buffer.r_total.size() != n || buffer.values.size() != n || buffer.dones.size() != n)
        throw std::invalid_argument("compute_gae: buffer incomplete");

    GaeResult g;
    g.advantages.assign(n, 0.0);
    g.returns.assign(n, 0.0);
    double gae = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const bool done = buffer.dones[t] != 0;
        const double next_v = done ? 0.0
                                   : (t + 1 == n ? buffer.bootstrap_value : buffer.values[t + 1]);
        const double delta = buffer.r_total[t] + cfg.gamma * next_v - buffer.values[t];
        gae = delta + cfg.gamma * cfg.lambda_gae * (done ? 0.0 : gae);
        g.advantages[t] = gae;
        g.returns[t] = gae + buffer.values[t];
    }
    return g;
}

void normalize_advantages(std::vector<double>& adv) {
    if (adv.empty()) return;
    const double n = static_cast<double>(adv.size());
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double stddev = std::sqrt(var / n);
    for (double& a : adv) a = (a - mean) / (stddev + 1e-8);
}

PpoUpdateStats ppo_update(PolicyState& policy, const RolloutBuffer& buffer,
                          const std::vector<double>& advantages,
                          const std::vector<double>& returns, const PpoConfig& cfg, Rng& rng) {
    const std::size_t n = buffer.size();
    if (n == 0) throw std::invalid_argument("ppo_update: empty buffer");
    if (advantages.size() != n || returns.size() != n)
        throw std::invalid_argument("ppo_update: advantage/return size mismatch");

    const int num_actions = policy.policy_spec.output_dim;
    PpoUpdateStats stats;
    long counted = 0;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> up_pol(static_cast<std::size_t>(num_actions));
    std::vector<double> up_val(1);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the portable Rng
        for (std::size_t i = n; i-- > 1;) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
            std::swap(idx[i], idx[j]);
        }
        const std::size_t mb = cfg.minibatch > 0 ? static_cast<std::size_t>(cfg.minibatch) : n;
        for (std::size_t off = 0; off < n; off += mb) {
            const std::size_t len = std::min(mb, n - off);
            const double inv_m = 1.0 / static_cast<double>(len);
            ParamVector gp = zero_params(policy.policy_spec);
            ParamVector gv = zero_params(policy.value_spec);

            for (std::size_t k = off; k < off + len; ++k) {
                const std::size_t i = idx[k];
                const auto& obs = buffer.obs[i];
                const int a = buffer.actions[i];
                const double adv = advantages[i];

                const auto logits = policy_logits(policy, obs);
                const double lse = log_sum_exp(logits);
                const double logp_a = logits[static_cast<std::size_t>(a)] - lse;
                const double ratio = std::exp(logp_a - buffer.log_probs[i]);

                const bool clipped = (ratio < 1.0 - cfg.clip_eps && adv < 0.0) ||
                                     (ratio > 1.0 + cfg.clip_eps && adv > 0.0);
                const double coef = clipped ? 0.0 : adv;

                double entropy = 0.0;
                for (std::size_t j = 0; j < logits.size(); ++j) {
                    const double lp = logits[j] - lse;
                    entropy -= std::exp(lp) * lp;
                }

                for (std::size_t j = 0; j < logits.size(); ++j) {
                    const double lp = logits[j] - lse;
                    const double pj = std::exp(lp);
                    const double ind = static_cast<int>(j) == a ? 1.0 : 0.0;
                    up_pol[j] = (-coef * ratio * (ind - pj) +
                                 cfg.entropy_coef * pj * (lp + entropy)) *
                                inv_m;
                }
                backward_into(policy.policy_spec, policy.policy, obs, up_pol, gp);

                const double v = value_estimate(policy, obs);
                up_val[0] = cfg.value_coef * 2.0 * (v - returns[i]) * inv_m;
                backward_into(policy.value_spec, policy.value, obs, up_val, gv);

                const double clip_lo = 1.0 - cfg.clip_eps;
                const double clip_hi = 1.0 + cfg.clip_eps;
                const double surr =
                    std::min(ratio * adv, std::clamp(ratio, clip_lo, clip_hi) * adv);
                stats.policy_loss += -surr;
                stats.value_loss += (v - returns[i]) * (v - returns[i]);
                stats.entropy += entropy;
                ++counted;
            }

            if (cfg.lr > 0.0) {
                optimizer_step(policy.policy, gp, policy.policy_opt, cfg.lr);
                optimizer_step(policy.value, gv, policy.value_opt, cfg.lr);
            }
        }
    }
    stats.policy_loss /= static_cast<double>(counted);
    stats.value_loss /= static_cast<double>(counted);
    stats.entropy /= static_cast<double>(counted);
    return stats;
}

std::unique_ptr<Env> make_env(const RunConfig& cfg) {
    if (cfg.env.kind == EnvKind::grid)
        return std::make_unique<GridWorld>(cfg.env.width, cfg.env.height, cfg.env.goal_x,
                                           cfg.env.goal_y, cfg.env.max_steps, cfg.env.onehot);
    return std::make_unique<ChainMdp>(cfg.env.chain_n, cfg.env.max_steps, cfg.env.slip_prob);
}

std::unique_ptr<CuriosityModule> make_curiosity_module(const RunConfig& cfg, int obs_dim,
                                                       int num_actions, std::uint64_t seed) {
    const SeedPlan sp = seed_plan(seed);
    const auto& cu = cfg.curiosity;
    const MlpSpec encoder{obs_dim, cu.hidden, cu.latent_dim,
                          activation_from_string(cu.activation)};

    switch (cfg.run.module) {
        case ModuleKind::dymecu:
        case ModuleKind::dymecu_one_learner:
        case ModuleKind::dymecu_predictor_heads: {
            DyMeCuConfig dc;
            dc.encoder = encoder;
            dc.alpha = cu.alpha;
            dc.lr = cu.lr;
            dc.normalize = cu.normalize;
            dc.minibatch = cu.minibatch;
            dc.omega_init =
                cu.omega_init == "learner_average" ? OmegaInit::learner_average : OmegaInit::seeded;
            dc.memory_update = cu.memory_update == "learner1"
                                   ? MemorySource::learner1
                                   : (cu.memory_update == "learner2" ? MemorySource::learner2
                                                                     : MemorySource::both);
            if (cfg.run.module == ModuleKind::dymecu_one_learner)
                dc.variant = DyMeCuVariant::one_learner;
            if (cfg.run.module == ModuleKind::dymecu_predictor_heads) {
                dc.variant = DyMeCuVariant::predictor_heads;
                dc.extra_hidden = cu.extra_hidden;
            }
            return std::make_unique<DyMeCu>(dc, sp.theta1);
        }
        case ModuleKind::rnd: {
            RndConfig rc;
            rc.encoder = encoder;
            rc.lr = cu.lr;
            rc.normalize = cu.normalize;
            rc.minibatch = cu.minibatch;
            return std::make_unique<Rnd>(rc, sp.theta1);
        }
        case ModuleKind::icm: {
            IcmConfig ic;
            ic.encoder = encoder;
            ic.action_dim = num_actions;
            ic.forward_hidden = cu.hidden;
            ic.inverse_hidden = cu.hidden;
            ic.lr = cu.lr;
            ic.forward_loss_weight = cu.icm_forward_weight;
            ic.normalize = cu.normalize;
            ic.minibatch = cu.minibatch;
            return std::make_unique<Icm>(ic, sp.theta1);
        }
        case ModuleKind::disagreement: {
            DisagreementConfig dc;
            dc.encoder = encoder;
            dc.action_dim = num_actions;
            dc.model_hidden = cu.hidden;
            dc.ensemble = cu.ensemble;
            dc.lr = cu.lr;
            dc.normalize = cu.normalize;
            dc.minibatch = cu.minibatch;
            return std::make_unique<Disagreement>(dc, sp.theta1);
        }
        case ModuleKind::none: return std::make_unique<NoCuriosity>();
    }
    return std::make_unique<NoCuriosity>();
}

MetricsLog train_loop(const RunConfig& cfg, std::uint64_t seed, const TrainHooks* hooks) {
    validate(cfg);
    const SeedPlan sp = seed_plan(seed);

    auto env = make_env(cfg);
    auto module = make_curiosity_module(cfg, env->obs_dim(), env->num_actions(), seed);
    PolicyState pol = make_policy(env->obs_dim(), env->num_actions(), cfg.ppo.hidden, sp.policy);
    Rng act_rng(sp.actions);
    Rng shuffle_rng(sp.shuffle);

    MetricsLog log;
    log.seed = seed;

    std::set<int> visited;
    std::uint64_t episode = 0;
    Observation obs = env->reset(sp.env_base + episode);
    visited.insert(env->state_index());
    double ep_return = 0.0;

    long steps_done = 0;
    int iteration = 0;
    RolloutBuffer buf;
    const auto t0 = std::chrono::steady_clock::now();

    const auto phase_hook = [&](TrainPhase ph) {
        if (hooks && hooks->on_phase) hooks->on_phase(iteration, ph);
    };
    const PhaseCallback module_cb = [&](TrainPhase ph) { phase_hook(ph); };

    try {
        while (steps_done < cfg.run.total_steps) {
            // pretrain: intrinsic only; finetune: extrinsic only
            PpoConfig ppo = cfg.ppo;
            long phase_end = cfg.run.total_steps;
            if (cfg.run.mode == RunMode::pretrain_then_finetune) {
                if (steps_done < cfg.run.pretrain_steps) {
                    ppo.beta = 0.0;
                    phase_end = cfg.run.pretrain_steps;
                } else {
                    ppo.zeta = 0.0;
                }
            }
            const long horizon =
                std::min<long>(ppo.rollout_steps, phase_end - steps_done);

            buf.clear();
            std::vector<double> finished_returns;
            for (long t = 0; t < horizon; ++t) {
                const ActionSample as = sample_action(pol, obs, act_rng);
                const StepResult sr = env->step(as.action);
                buf.obs.push_back(obs);
                buf.next_obs.push_back(sr.obs);
                buf.actions.push_back(as.action);
                buf.log_probs.push_back(as.log_prob);
                buf.values.push_back(as.value);
                buf.r_ext.push_back(sr.reward);
                buf.dones.push_back(sr.done ? 1 : 0);
                ep_return += sr.reward;
                visited.insert(env->state_index());
                if (sr.done) {
                    finished_returns.push_back(ep_return);
                    ep_return = 0.0;
                    ++episode;
                    obs = env->reset(sp.env_base + episode);
                    visited.insert(env->state_index());
                } else {
                    obs = sr.obs;
                }
            }
            steps_done += horizon;
            phase_hook(TrainPhase::rollout);

            const StateBatch batch{buf.obs, buf.actions, buf.next_obs};
            buf.r_int_raw = module->raw_rewards(batch);
            buf.r_int_norm.resize(buf.r_int_raw.size());
            for (std::size_t i = 0; i < buf.r_int_raw.size(); ++i)
                buf.r_int_norm[i] = module->normalize_reward(buf.r_int_raw[i]);
            buf.r_total.resize(buf.size());
            for (std::size_t i = 0; i < buf.size(); ++i)
                buf.r_total[i] = total_reward(buf.r_int_norm[i], buf.r_ext[i], ppo);
            buf.bootstrap_value = buf.dones.back() ? 0.0 : value_estimate(pol, obs);
            phase_hook(TrainPhase::rewards);

            const UpdateInfo ui = module->update(batch, &module_cb);

            GaeResult gae = compute_gae(buf, ppo);
            normalize_advantages(gae.advantages);
            const PpoUpdateStats st = ppo_update(pol, buf, gae.advantages, gae.returns, ppo,
                                                 shuffle_rng);
            phase_hook(TrainPhase::policy_update);

            MetricsRecord rec;
            rec.step = steps_done;
            rec.iteration = iteration;
            rec.episodes = static_cast<int>(finished_returns.size());
            rec.ep_return_mean =
                finished_returns.empty()
                    ? 0.0
                    : std::accumulate(finished_returns.begin(), finished_returns.end(), 0.0) /
                          static_cast<double>(finished_returns.size());
            auto moments = [](const std::vector<double>& xs, double& mean, double& stddev) {
                mean = 0.0;
                stddev = 0.0;
                if (xs.empty()) return;
                for (double x : xs) mean += x;
                mean /= static_cast<double>(xs.size());
                double var = 0.0;
                for (double x : xs) var += (x - mean) * (x - mean);
                stddev = std::sqrt(var / static_cast<double>(xs.size()));
            };
            moments(buf.r_int_raw, rec.rint_raw_mean, rec.rint_raw_std);
            moments(buf.r_int_norm, rec.rint_norm_mean, rec.rint_norm_std);
            rec.coverage = coverage(visited, *env);
            rec.loss1 = ui.loss1;
            rec.loss2 = ui.loss2;
            rec.policy_loss = st.policy_loss;
            rec.value_loss = st.value_loss;
            rec.entropy = st.entropy;
            rec.wall_clock_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            log.records.push_back(rec);
            ++iteration;
        }
    } catch (NanAbort& e) {
        // attach a post-mortem checkpoint before propagating
        nlohmann::json state;
        state["seed"] = seed;
        state["iteration"] = iteration;
        state["steps_done"] = steps_done;
        state["module"] = module->checkpoint();
        state["policy"] = detail::params_to_json(pol.policy);
        state["value"] = detail::params_to_json(pol.value);
        throw NanAbort(e.what(), std::move(state));
    }
    return log;
}

} // namespace dymecu
