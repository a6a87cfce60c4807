#include <doctest.h>

#include <cmath>

#include "dymecu/config.hpp"
#include "dymecu/env.hpp"
#include "dymecu/ppo.hpp"

using namespace dymecu;

namespace {

// O(T^2) discounted-sum advantage oracle: A_t = sum_l (gamma*lambda)^l d_{t+l}
// with the sum cut at the first terminal step.
std::vector<double> brute_force_gae(const RolloutBuffer& buf, const PpoConfig& cfg) {
    const std::size_t n = buf.size();
    std::vector<double> delta(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double next_v =
            buf.dones[t] ? 0.0 : (t + 1 == n ? buf.bootstrap_value : buf.values[t + 1]);
        delta[t] = buf.r_total[t] + cfg.gamma * next_v - buf.values[t];
    }
    std::vector<double> adv(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double w = 1.0;
        for (std::size_t l = t; l < n; ++l) {
            adv[t] += w * delta[l];
            if (buf.dones[l]) break;
            w *= cfg.gamma * cfg.lambda_gae;
        }
    }
    return adv;
}

RolloutBuffer random_buffer(Rng& rng, std::size_t n, int obs_dim = 2) {
    RolloutBuffer buf;
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<double> o(static_cast<std::size_t>(obs_dim));
        for (auto& v : o) v = rng.uniform();
        buf.obs.push_back(o);
        buf.next_obs.push_back(o);
        buf.actions.push_back(static_cast<int>(rng.below(2)));
        buf.log_probs.push_back(-std::log(2.0));
        buf.values.push_back(rng.uniform(-1.0, 1.0));
        buf.r_ext.push_back(rng.uniform(-1.0, 1.0));
        buf.r_int_raw.push_back(0.0);
        buf.r_int_norm.push_back(0.0);
        buf.r_total.push_back(buf.r_ext.back());
        buf.dones.push_back(rng.uniform() < 0.15 ? 1 : 0);
    }
    buf.bootstrap_value = rng.uniform(-1.0, 1.0);
    return buf;
}

RunConfig tiny_grid_config() {
    RunConfig cfg;
    cfg.run.module = ModuleKind::none;
    cfg.run.seeds = {1};
    cfg.run.total_steps = 2048;
    cfg.env.kind = EnvKind::grid;
    cfg.env.width = 2;
    cfg.env.height = 2;
    cfg.env.goal_x = 1;
    cfg.env.goal_y = 1;
    cfg.env.max_steps = 8;
    cfg.env.onehot = true;
    cfg.curiosity.hidden = {16};
    cfg.curiosity.latent_dim = 8;
    cfg.ppo.rollout_steps = 128;
    cfg.ppo.minibatch = 64;
    cfg.ppo.hidden = {16};
    cfg.ppo.zeta = 0.0;
    cfg.ppo.beta = 1.0;
    return cfg;
}

} // namespace

TEST_CASE("total reward mixes the streams linearly") {
    PpoConfig cfg;
    cfg.zeta = 1.0;
    cfg.beta = 2.0;
    CHECK(total_reward(0.5, 1.0, cfg) == 2.5);
    cfg.zeta = 0.0;
    CHECK(total_reward(123.0, 1.5, cfg) == 3.0);
    cfg.zeta = 1.0;
    cfg.beta = 0.0;
    CHECK(total_reward(0.7, 99.0, cfg) == 0.7);

    cfg.zeta = 1.3;
    cfg.beta = 0.6;
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const double c = rng.uniform(-2.0, 2.0), d = rng.uniform(-2.0, 2.0);
        CHECK(total_reward(a, b, cfg) + total_reward(c, d, cfg) ==
              doctest::Approx(total_reward(a + c, b + d, cfg)).epsilon(1e-12));
    }
}

TEST_CASE("gae telescopes with gamma = lambda = 1") {
    RolloutBuffer buf;
    buf.obs = {{0.0}, {0.0}};
    buf.next_obs = buf.obs;
    buf.actions = {0, 0};
    buf.log_probs = {0.0, 0.0};
    buf.values = {0.0, 0.0};
    buf.r_ext = {1.0, 1.0};
    buf.r_total = {1.0, 1.0};
    buf.r_int_raw = {0.0, 0.0};
    buf.r_int_norm = {0.0, 0.0};
    buf.dones = {0, 1};
    PpoConfig cfg;
    cfg.gamma = 1.0;
    cfg.lambda_gae = 1.0;
    const auto g = compute_gae(buf, cfg);
    CHECK(g.advantages[0] == 2.0);
    CHECK(g.advantages[1] == 1.0);
    CHECK(g.returns[0] == 2.0);
    CHECK(g.returns[1] == 1.0);
}

TEST_CASE("gae of an all-zero buffer is zero") {
    RolloutBuffer buf;
    for (int i = 0; i < 5; ++i) {
        buf.obs.push_back({0.0});
        buf.next_obs.push_back({0.0});
        buf.actions.push_back(0);
        buf.log_probs.push_back(0.0);
        buf.values.push_back(0.0);
        buf.r_ext.push_back(0.0);
        buf.r_total.push_back(0.0);
        buf.r_int_raw.push_back(0.0);
        buf.r_int_norm.push_back(0.0);
        buf.dones.push_back(0);
    }
    PpoConfig cfg;
    const auto g = compute_gae(buf, cfg);
    for (double a : g.advantages) CHECK(a == 0.0);
}

TEST_CASE("gae matches the brute-force oracle") {
    Rng rng(2025);
    PpoConfig cfg;
    for (int trial = 0; trial < 40; ++trial) {
        cfg.gamma = rng.uniform(0.5, 1.0);
        cfg.lambda_gae = rng.uniform(0.0, 1.0);
        const std::size_t n = 1 + rng.below(32);
        const auto buf = random_buffer(rng, n);
        const auto g = compute_gae(buf, cfg);
        const auto oracle = brute_force_gae(buf, cfg);
        for (std::size_t t = 0; t < n; ++t)
            CHECK(std::abs(g.advantages[t] - oracle[t]) < 1e-10);
    }
}

TEST_CASE("gae rejects an empty buffer") {
    RolloutBuffer buf;
    PpoConfig cfg;
    CHECK_THROWS_AS(compute_gae(buf, cfg), std::invalid_argument);
}

TEST_CASE("advantage normalization yields mean zero and unit std") {
    Rng rng(33);
    std::vector<double> adv(257);
    for (auto& a : adv) a = rng.uniform(-3.0, 7.0);
    normalize_advantages(adv);
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ppo_update with lr = 0 leaves the policy unchanged") {
    PolicyState pol = make_policy(2, 2, {8}, 90);
    Rng rng(6);
    auto buf = random_buffer(rng, 16);
    auto g = compute_gae(buf, PpoConfig{});
    normalize_advantages(g.advantages);
    PpoConfig cfg;
    cfg.lr = 0.0;
    cfg.epochs = 1;
    const auto before = pol.policy.values;
    Rng shuffle(7);
    ppo_update(pol, buf, g.advantages, g.returns, cfg, shuffle);
    CHECK(pol.policy.values == before);
}

TEST_CASE("at ratio one the clip is inactive for any epsilon") {
    // rollout-time log-probs match the current policy, so every ratio is
    // exactly 1 on the first (and only) pass; the update must not depend
    // on clip_eps
    auto make_buf = [](const PolicyState& pol, Rng& rng) {
        RolloutBuffer buf;
        GridWorld env(3, 3, 2, 2, 16, false);
        auto obs = env.reset(0);
        for (int t = 0; t < 32; ++t) {
            const auto a = sample_action(pol, obs, rng);
            const auto sr = env.step(a.action);
            buf.obs.push_back(obs);
            buf.next_obs.push_back(sr.obs);
            buf.actions.push_back(a.action);
            buf.log_probs.push_back(a.log_prob);
            buf.values.push_back(a.value);
            buf.r_ext.push_back(sr.reward);
            buf.r_total.push_back(sr.reward);
            buf.r_int_raw.push_back(0.0);
            buf.r_int_norm.push_back(0.0);
            buf.dones.push_back(sr.done ? 1 : 0);
            if (sr.done) obs = env.reset(0);
            else obs = sr.obs;
        }
        buf.bootstrap_value = buf.dones.back() ? 0.0 : value_estimate(pol, obs);
        return buf;
    };

    PolicyState a = make_policy(2, 4, {8}, 91);
    PolicyState b = a;
    Rng rng_a(8);
    const auto buf = make_buf(a, rng_a);
    auto g = compute_gae(buf, PpoConfig{});
    normalize_advantages(g.advantages);

    PpoConfig wide;
    wide.epochs = 1;
    wide.minibatch = 1024;
    wide.clip_eps = 0.2;
    PpoConfig narrow = wide;
    narrow.clip_eps = 1e-6;

    Rng sh_a(9), sh_b(9);
    ppo_update(a, buf, g.advantages, g.returns, wide, sh_a);
    ppo_update(b, buf, g.advantages, g.returns, narrow, sh_b);
    CHECK(a.policy.values == b.policy.values);
    CHECK(a.value.values == b.value.values);
}

TEST_CASE("a fixed advantage steers a two-armed bandit monotonically") {
    PolicyState pol = make_policy(1, 2, {8}, 92);
    const std::vector<double> obs{1.0};
    PpoConfig cfg;
    cfg.epochs = 1;
    cfg.minibatch = 64;
    cfg.entropy_coef = 0.0;
    cfg.value_coef = 0.0;
    cfg.lr = 3e-3;

    auto prob_arm0 = [&]() {
        const auto logits = policy_logits(pol, obs);
        const double mx = std::max(logits[0], logits[1]);
        const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
        return std::exp(logits[0] - mx) / z;
    };

    Rng rng(10);
    double prev = prob_arm0();
    for (int it = 0; it < 50; ++it) {
        RolloutBuffer buf;
        std::vector<double> adv;
        for (int t = 0; t < 32; ++t) {
            const auto a = sample_action(pol, obs, rng);
            buf.obs.push_back(obs);
            buf.next_obs.push_back(obs);
            buf.actions.push_back(a.action);
            buf.log_probs.push_back(a.log_prob);
            buf.values.push_back(0.0);
            buf.r_ext.push_back(0.0);
            buf.r_total.push_back(0.0);
            buf.r_int_raw.push_back(0.0);
            buf.r_int_norm.push_back(0.0);
            buf.dones.push_back(1);
            adv.push_back(a.action == 0 ? 1.0 : -1.0);
        }
        std::vector<double> ret(buf.size(), 0.0);
        Rng sh(11);
        ppo_update(pol, buf, adv, ret, cfg, sh);
        const double cur = prob_arm0();
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK(prev > 0.5);
}

TEST_CASE("train_loop solves an effectively dense 2x2 grid") {
    RunConfig cfg = tiny_grid_config();
    cfg.run.total_steps = 128 * 200;
    const auto log = train_loop(cfg, 1);
    REQUIRE(!log.records.empty());
    // optimal behavior: every episode ends at the goal, return 1
    double tail = 0.0;
    int count = 0;
    for (std::size_t i = log.records.size() - 10; i < log.records.size(); ++i) {
        tail += log.records[i].ep_return_mean;
        ++count;
    }
    CHECK(tail / count >= 0.95);
}

TEST_CASE("train_loop is deterministic bit for bit") {
    RunConfig cfg = tiny_grid_config();
    cfg.run.module = ModuleKind::dymecu;
    cfg.ppo.zeta = 1.0;
    cfg.run.total_steps = 512;
    const auto a = train_loop(cfg, 7);
    const auto b = train_loop(cfg, 7);
    CHECK(deterministic_equal(a, b));
}

TEST_CASE("with zeta 0 and module none the intrinsic pathway is inert") {
    RunConfig cfg = tiny_grid_config();
    cfg.run.total_steps = 512;
    const auto log = train_loop(cfg, 3);
    for (const auto& r : log.records) {
        CHECK(r.rint_raw_mean == 0.0);
        CHECK(r.rint_norm_mean == 0.0);
    }
}

TEST_CASE("phases follow the prescribed order every iteration") {
    RunConfig cfg = tiny_grid_config();
    cfg.run.module = ModuleKind::dymecu;
    cfg.ppo.zeta = 1.0;
    cfg.run.total_steps = 384;

    struct Event {
        int iteration;
        TrainPhase phase;
    };
    std::vector<Event> events;
    TrainHooks hooks;
    hooks.on_phase = [&](int it, TrainPhase ph) { events.push_back({it, ph}); };
    train_loop(cfg, 5, &hooks);

    REQUIRE(!events.empty());
    int max_iter = 0;
    for (const auto& e : events) max_iter = std::max(max_iter, e.iteration);
    for (int it = 0; it <= max_iter; ++it) {
        std::vector<TrainPhase> seq;
        for (const auto& e : events)
            if (e.iteration == it) seq.push_back(e.phase);
        REQUIRE(!seq.empty());
        CHECK(seq.front() == TrainPhase::rollout);
        CHECK(seq[1] == TrainPhase::rewards);
        CHECK(seq.back() == TrainPhase::policy_update);
        // learner updates strictly precede their memory updates, and all of
        // them precede the policy update
        bool saw_learner = false;
        for (std::size_t i = 2; i + 1 < seq.size(); ++i) {
            CHECK((seq[i] == TrainPhase::learner_update || seq[i] == TrainPhase::memory_update));
            if (seq[i] == TrainPhase::learner_update) saw_learner = true;
            if (seq[i] == TrainPhase::memory_update) CHECK(saw_learner);
        }
        // strict alternation: each learner step is followed by one memory step
        for (std::size_t i = 2; i + 1 < seq.size(); i += 2) {
            CHECK(seq[i] == TrainPhase::learner_update);
            CHECK(seq[i + 1] == TrainPhase::memory_update);
        }
    }
}

TEST_CASE("non-finite logits abort with a checkpoint") {
    PolicyState pol = make_policy(2, 2, {4}, 93);
    pol.policy.values[0] = std::numeric_limits<double>::quiet_NaN();
    Rng rng(12);
    CHECK_THROWS_AS(sample_action(pol, std::vector<double>{0.1, 0.2}, rng), NanAbort);
}

TEST_CASE("pretrain then finetune switches the reward streams") {
    RunConfig cfg = tiny_grid_config();
    cfg.run.module = ModuleKind::dymecu;
    cfg.run.mode = RunMode::pretrain_then_finetune;
    cfg.run.total_steps = 512;
    cfg.run.pretrain_steps = 256;
    cfg.ppo.zeta = 1.0;
    cfg.ppo.beta = 2.0;
    const auto log = train_loop(cfg, 9);
    REQUIRE(log.records.size() >= 4);
    // phase boundary respected: records exist at exactly 256 and 512 steps
    bool saw_boundary = false;
    for (const auto& r : log.records) {
        CHECK(r.step <= 512);
        if (r.step == 256) saw_boundary = true;
    }
    CHECK(saw_boundary);
}
