#include <doctest.h>

#include "dymecu/config.hpp"

using namespace dymecu;

TEST_CASE("default config round-trips exactly") {
    const RunConfig cfg;
    const auto text = serialize_config(cfg);
    const RunConfig back = parse_config(text);
    CHECK(back == cfg);
    CHECK(serialize_config(back) == text);
}

TEST_CASE("non-default configs round-trip exactly") {
    RunConfig cfg;
    cfg.run.module = ModuleKind::icm;
    cfg.run.seeds = {3, 17, 99};
    cfg.run.total_steps = 123456;
    cfg.run.mode = RunMode::pretrain_then_finetune;
    cfg.run.pretrain_steps = 1000;
    cfg.run.out_dir = "runs/weird dir";
    cfg.env.kind = EnvKind::chain;
    cfg.env.chain_n = 17;
    cfg.env.slip_prob = 0.125;
    cfg.env.max_steps = 68;
    cfg.curiosity.alpha = 0.9999;
    cfg.curiosity.hidden = {8};
    cfg.curiosity.latent_dim = 4;
    cfg.curiosity.lr = 0.0007;
    cfg.curiosity.activation = "tanh";
    cfg.curiosity.omega_init = "learner_average";
    cfg.ppo.gamma = 0.997;
    cfg.ppo.lambda_gae = 0.9;
    cfg.ppo.zeta = 0.25;
    cfg.ppo.beta = 0.0;
    cfg.ppo.hidden = {32, 32, 32};
    const RunConfig back = parse_config(serialize_config(cfg));
    CHECK(back == cfg);
}

TEST_CASE("comments, blank lines and spacing are tolerated") {
    const std::string text =
        "# experiment\n"
        "\n"
        "[run]\n"
        "module = \"rnd\"   # baseline\n"
        "seeds = [ 1 ,2 ]\n"
        "\n"
        "[ppo]\n"
        "gamma = 0.5\n";
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.run.module == ModuleKind::rnd);
    CHECK(cfg.run.seeds == std::vector<long>{1, 2});
    CHECK(cfg.ppo.gamma == 0.5);
    // untouched fields keep their defaults
    CHECK(cfg.ppo.lambda_gae == 0.95);
}

TEST_CASE("unknown fields are rejected with the offending line") {
    const std::string text =
        "[run]\n"
        "module = \"dymecu\"\n"
        "unknown_knob = 3\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("unknown_knob") != std::string::npos);
    }
}

TEST_CASE("unknown sections and stray keys are rejected") {
    CHECK_THROWS_AS(parse_config("[nope]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("x = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nmodule = \"not_a_module\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nseeds = [1, oops]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[ppo]\ngamma = \"high\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\ntotal_steps = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nmodule = \"rnd\"\nmodule = \"icm\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nmodule\n"), ConfigError);
}

TEST_CASE("validate reports inconsistencies before training") {
    RunConfig cfg;
    CHECK_NOTHROW(validate(cfg));

    RunConfig bad = cfg;
    bad.ppo.gamma = 1.5;
    bad.run.seeds = {};
    bad.env.goal_x = 99;
    try {
        validate(bad);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("gamma") != std::string::npos);
        CHECK(msg.find("seeds") != std::string::npos);
        CHECK(msg.find("goal") != std::string::npos);
    }

    RunConfig pre = cfg;
    pre.run.mode = RunMode::pretrain_then_finetune;
    pre.run.pretrain_steps = 0;
    CHECK_THROWS_AS(validate(pre), std::invalid_argument);
    pre.run.pretrain_steps = cfg.run.total_steps;
    CHECK_THROWS_AS(validate(pre), std::invalid_argument);

    RunConfig ms = cfg;
    ms.curiosity.memory_update = "learner1";
    ms.run.module = ModuleKind::rnd;
    CHECK_THROWS_AS(validate(ms), std::invalid_argument);
    ms.run.module = ModuleKind::dymecu;
    CHECK_NOTHROW(validate(ms));
}

TEST_CASE("goal on the start cell is rejected") {
    RunConfig cfg;
    cfg.env.goal_x = 0;
    cfg.env.goal_y = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("seed plan pins the learner seeds to (seed, seed+1)") {
    const SeedPlan p = seed_plan(1234);
    CHECK(p.theta1 == 1234);
    CHECK(p.theta2 == 1235);
    CHECK(p.omega == 1236);
    // distinct stream families
    CHECK(p.policy != p.theta1);
    CHECK(p.actions != p.policy);
    CHECK(p.env_base != p.actions);
}
