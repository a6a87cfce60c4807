#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "dymecu/curiosity.hpp"

using namespace dymecu;

namespace {

DyMeCuConfig small_config(DyMeCuVariant variant = DyMeCuVariant::dual) {
    DyMeCuConfig cfg;
    cfg.encoder = MlpSpec{4, {16, 16}, 8, Activation::relu};
    cfg.variant = variant;
    if (variant == DyMeCuVariant::predictor_heads) cfg.extra_hidden = {8, 8};
    cfg.alpha = 0.99;
    cfg.lr = 1e-2;
    cfg.normalize = false;
    return cfg;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

} // namespace

TEST_CASE("intrinsic reward basics") {
    const std::vector<double> a{1.0, 0.0};
    const std::vector<double> b{0.0, 1.0};
    CHECK(intrinsic_reward(a, a) == 0.0);
    CHECK(intrinsic_reward(a, b) == 2.0);
    CHECK_THROWS_AS(intrinsic_reward(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("memory offsets cancel out of the reward") {
    // ||(z1-zw) - (z2-zw)||^2 == ||z1-z2||^2 for any zw
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(32);
        const auto z1 = random_vec(rng, n, -5.0, 5.0);
        const auto z2 = random_vec(rng, n, -5.0, 5.0);
        const auto zw = random_vec(rng, n, -5.0, 5.0);
        std::vector<double> d1(n), d2(n);
        for (std::size_t i = 0; i < n; ++i) {
            d1[i] = z1[i] - zw[i];
            d2[i] = z2[i] - zw[i];
        }
        CHECK(std::abs(intrinsic_reward(d1, d2) - intrinsic_reward(z1, z2)) < 1e-9);
    }
}

TEST_CASE("learner losses") {
    const std::vector<double> z{0.0, 0.0};
    const std::vector<double> zw{1.0, 1.0};
    const auto [l1, l2] = learner_losses(z, zw, zw);
    CHECK(l1 == 2.0);
    CHECK(l2 == 0.0);

    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(16);
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        const auto w = random_vec(rng, n);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s1 += (a[i] - w[i]) * (a[i] - w[i]);
            s2 += (b[i] - w[i]) * (b[i] - w[i]);
        }
        const auto [x1, x2] = learner_losses(a, b, w);
        CHECK(x1 == doctest::Approx(s1).epsilon(1e-12));
        CHECK(x2 == doctest::Approx(s2).epsilon(1e-12));
    }
}

TEST_CASE("encode_all matches per-network forward passes") {
    DyMeCu mod(small_config(), 21);
    Rng rng(9);
    const auto s = random_vec(rng, 4);
    const auto e = mod.encode_all(s);
    CHECK(e.z1 == forward(mod.learner_spec(), mod.theta1(), s));
    CHECK(e.z2 == forward(mod.learner_spec(), mod.theta2(), s));
    CHECK(e.zw == forward(mod.memory_spec(), mod.omega(), s));
}

TEST_CASE("forced identical learners encode identically") {
    DyMeCu mod(small_config(), 22);
    mod.theta2() = mod.theta1();
    Rng rng(10);
    const auto s = random_vec(rng, 4);
    const auto e = mod.encode_all(s);
    CHECK(e.z1 == e.z2);
    CHECK(mod.raw_reward(s) == 0.0);
}

TEST_CASE("zero-parameter networks encode everything to zero") {
    DyMeCu mod(small_config(), 23);
    mod.theta1() = zero_params(mod.learner_spec());
    mod.theta2() = zero_params(mod.learner_spec());
    mod.omega() = zero_params(mod.memory_spec());
    const std::vector<double> s{0.4, -0.2, 0.9, 0.1};
    const auto e = mod.encode_all(s);
    for (double v : e.z1) CHECK(v == 0.0);
    for (double v : e.z2) CHECK(v == 0.0);
    for (double v : e.zw) CHECK(v == 0.0);
    CHECK(mod.raw_reward(s) == 0.0);
}

TEST_CASE("training on one state fades its curiosity by 90 percent") {
    DyMeCu mod(small_config(), 24);
    const std::vector<double> s{0.5, -0.5, 0.25, 1.0};
    const std::vector<std::vector<double>> batch{s};
    const double r0 = mod.raw_reward(s);
    REQUIRE(r0 > 0.0);
    auto [l1_0, l2_0] = learner_losses(mod.encode_all(s).z1, mod.encode_all(s).z2,
                                       mod.encode_all(s).zw);
    for (int i = 0; i < 500; ++i) {
        mod.update_learners(batch);
        mod.consolidate_memory();
        CHECK(mod.raw_reward(s) >= 0.0);
    }
    const auto e = mod.encode_all(s);
    const auto [l1, l2] = learner_losses(e.z1, e.z2, e.zw);
    CHECK(l1 <= 0.1 * l1_0);
    CHECK(l2 <= 0.1 * l2_0);
    CHECK(mod.raw_reward(s) <= 0.1 * r0);
}

TEST_CASE("lr = 0 freezes the learners") {
    auto cfg = small_config();
    cfg.lr = 0.0;
    DyMeCu mod(cfg, 25);
    const auto t1 = mod.theta1();
    const auto t2 = mod.theta2();
    const std::vector<std::vector<double>> batch{{0.1, 0.2, 0.3, 0.4}};
    mod.update_learners(batch);
    CHECK(mod.theta1() == t1);
    CHECK(mod.theta2() == t2);
}

TEST_CASE("update_learners rejects an empty batch") {
    DyMeCu mod(small_config(), 26);
    CHECK_THROWS_AS(mod.update_learners({}), std::invalid_argument);
}

TEST_CASE("single linear layer sgd update equals the closed-form step") {
    DyMeCuConfig cfg;
    cfg.encoder = MlpSpec{2, {}, 2, Activation::relu};
    cfg.lr = 0.1;
    cfg.opt = OptMode::sgd;
    cfg.normalize = false;
    DyMeCu mod(cfg, 30);
    const std::vector<double> s{0.7, -0.3};
    const auto t1_before = mod.theta1();
    const auto z1 = forward(mod.learner_spec(), t1_before, s);
    const auto zw = forward(mod.memory_spec(), mod.omega(), s);

    mod.update_learners(std::vector<std::vector<double>>{s});

    // dL/dW[o][i] = 2 (z[o] - zw[o]) x[i]; dL/db[o] = 2 (z[o] - zw[o])
    for (int o = 0; o < 2; ++o) {
        for (int i = 0; i < 2; ++i) {
            const std::size_t k = static_cast<std::size_t>(o) * 2 + i;
            const double expect = t1_before.values[k] - 0.1 * 2.0 * (z1[o] - zw[o]) * s[i];
            CHECK(mod.theta1().values[k] == doctest::Approx(expect).epsilon(1e-14));
        }
        const std::size_t kb = 4 + static_cast<std::size_t>(o);
        const double expect_b = t1_before.values[kb] - 0.1 * 2.0 * (z1[o] - zw[o]);
        CHECK(mod.theta1().values[kb] == doctest::Approx(expect_b).epsilon(1e-14));
    }
}

TEST_CASE("consolidate_memory matches the ema formula") {
    for (double alpha : {0.0, 0.5, 0.99, 1.0}) {
        auto cfg = small_config();
        cfg.alpha = alpha;
        DyMeCu mod(cfg, 31);
        const auto omega_before = mod.omega();
        const auto expected =
            ema_blend(omega_before, {&mod.theta1(), &mod.theta2()}, alpha);
        mod.consolidate_memory();
        CHECK(mod.omega().values == expected.values);
        if (alpha == 1.0) CHECK(mod.omega().values == omega_before.values);
        if (alpha == 0.0) {
            for (std::size_t i = 0; i < mod.omega().values.size(); ++i)
                CHECK(mod.omega().values[i] ==
                      (mod.theta1().values[i] + mod.theta2().values[i]) / 2.0);
        }
    }
}

TEST_CASE("memory consolidation is a contraction toward the learner mean") {
    auto cfg = small_config();
    cfg.alpha = 0.99;
    DyMeCu mod(cfg, 32);
    const auto before = mod.omega();
    double gap = 0.0;
    for (std::size_t i = 0; i < before.values.size(); ++i) {
        const double mean = (mod.theta1().values[i] + mod.theta2().values[i]) / 2.0;
        gap = std::max(gap, std::abs(mean - before.values[i]));
    }
    mod.consolidate_memory();
    double moved = 0.0;
    for (std::size_t i = 0; i < before.values.size(); ++i)
        moved = std::max(moved, std::abs(mod.omega().values[i] - before.values[i]));
    CHECK(moved <= (1.0 - 0.99) * gap * (1.0 + 1e-12));
}

TEST_CASE("identically initialized learners stay identical under training") {
    DyMeCu mod(small_config(), 33);
    mod.theta2() = mod.theta1();
    Rng rng(11);
    std::vector<std::vector<double>> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(random_vec(rng, 4));
    for (int step = 0; step < 50; ++step) {
        mod.update_learners(batch);
        mod.consolidate_memory();
        REQUIRE(mod.theta1().values == mod.theta2().values);
        for (const auto& s : batch) CHECK(mod.raw_reward(s) == 0.0);
    }
}

TEST_CASE("one-learner variant") {
    DyMeCu mod(small_config(DyMeCuVariant::one_learner), 34);
    Rng rng(12);
    const auto s = random_vec(rng, 4);

    SUBCASE("reward equals the learner loss against the memory") {
        const auto z = forward(mod.learner_spec(), mod.theta1(), s);
        const auto zw = forward(mod.memory_spec(), mod.omega(), s);
        const auto [l1, l2] = learner_losses(z, z, zw);
        CHECK(mod.one_learner_reward(s) == doctest::Approx(l1).epsilon(1e-12));
    }
    SUBCASE("theta == omega gives zero reward") {
        mod.omega() = mod.theta1();
        CHECK(mod.one_learner_reward(s) == 0.0);
    }
    SUBCASE("zero networks give zero reward") {
        mod.theta1() = zero_params(mod.learner_spec());
        mod.omega() = zero_params(mod.memory_spec());
        CHECK(mod.one_learner_reward(s) == 0.0);
    }
    SUBCASE("memory update blends only the single learner") {
        const auto expected = ema_blend(mod.omega(), {&mod.theta1()}, mod.alpha());
        mod.consolidate_memory();
        CHECK(mod.omega().values == expected.values);
    }
}

TEST_CASE("one_learner_reward rejects dual configurations") {
    DyMeCu mod(small_config(), 35);
    CHECK_THROWS_AS(mod.one_learner_reward(std::vector<double>{0.1, 0.2, 0.3, 0.4}),
                    std::invalid_argument);
}

TEST_CASE("one-source consolidation uses exactly one learner") {
    for (auto which : {DyMeCu::Learner::learner1, DyMeCu::Learner::learner2}) {
        for (double alpha : {0.0, 0.99, 1.0}) {
            auto cfg = small_config();
            cfg.alpha = alpha;
            DyMeCu mod(cfg, 36);
            const auto& source =
                which == DyMeCu::Learner::learner1 ? mod.theta1() : mod.theta2();
            const auto expected = ema_blend(mod.omega(), {&source}, alpha);
            const auto before = mod.omega();
            mod.consolidate_memory_one_source(which);
            CHECK(mod.omega().values == expected.values);
            if (alpha == 1.0) CHECK(mod.omega().values == before.values);
            if (alpha == 0.0) CHECK(mod.omega().values == source.values);
        }
    }
    DyMeCu single(small_config(DyMeCuVariant::one_learner), 37);
    CHECK_THROWS_AS(single.consolidate_memory_one_source(DyMeCu::Learner::learner1),
                    std::invalid_argument);
}

TEST_CASE("predictor heads: identity pass-through reproduces the base reward") {
    // keep every pre-activation non-negative so relu acts as identity
    DyMeCuConfig cfg;
    cfg.encoder = MlpSpec{3, {4}, 4, Activation::relu};
    cfg.normalize = false;
    DyMeCu base(cfg, 40);
    // non-negative parameters and inputs
    for (auto* p : {&base.theta1(), &base.theta2(), &base.omega()})
        for (auto& v : p->values) v = std::abs(v);

    DyMeCu deep = base.with_predictor_heads({4, 4});
    // overwrite the appended head layers with identity weight matrices
    const std::size_t base_count = base.theta1().values.size();
    for (auto* p : {&deep.theta1(), &deep.theta2()}) {
        std::fill(p->values.begin() + static_cast<std::ptrdiff_t>(base_count), p->values.end(),
                  0.0);
        std::size_t off = base_count;
        for (int layer = 0; layer < 3; ++layer) { // 4->4, 4->4, 4->4
            for (int d = 0; d < 4; ++d) p->values[off + static_cast<std::size_t>(d) * 4 + d] = 1.0;
            off += 4 * 4 + 4;
        }
    }

    const std::vector<double> s{0.3, 0.6, 0.9};
    CHECK(deep.raw_reward(s) == doctest::Approx(base.raw_reward(s)).epsilon(1e-12));
}

TEST_CASE("predictor heads grow the parameter count by the implied sizes") {
    DyMeCuConfig cfg;
    cfg.encoder = MlpSpec{4, {16, 16}, 8, Activation::relu};
    DyMeCu base(cfg, 41);
    DyMeCu deep = base.with_predictor_heads({32, 32});
    const std::size_t added = (8 * 32 + 32) + (32 * 32 + 32) + (32 * 8 + 8);
    CHECK(deep.theta1().values.size() == base.theta1().values.size() + added);
    CHECK(deep.learner_spec().output_dim == base.memory_spec().output_dim);
    CHECK(deep.omega().values.size() == base.omega().values.size());
    // base parameters carried into the prefix
    for (std::size_t i = 0; i < base.theta1().values.size(); ++i)
        CHECK(deep.theta1().values[i] == base.theta1().values[i]);
}

TEST_CASE("predictor heads still fade curiosity under training") {
    DyMeCuConfig cfg;
    cfg.encoder = MlpSpec{4, {16, 16}, 8, Activation::relu};
    cfg.variant = DyMeCuVariant::predictor_heads;
    cfg.extra_hidden = {8, 8};
    cfg.lr = 1e-2;
    cfg.normalize = false;
    DyMeCu mod(cfg, 42);
    const std::vector<double> s{0.5, -0.5, 0.25, 1.0};
    const std::vector<std::vector<double>> batch{s};
    const auto e0 = mod.encode_all(s);
    const auto [l1_0, l2_0] = learner_losses(e0.z1, e0.z2, e0.zw);
    for (int i = 0; i < 500; ++i) {
        mod.update_learners(batch);
        mod.consolidate_memory();
    }
    const auto e = mod.encode_all(s);
    const auto [l1, l2] = learner_losses(e.z1, e.z2, e.zw);
    CHECK(l1 <= 0.1 * l1_0);
    CHECK(l2 <= 0.1 * l2_0);
}

TEST_CASE("with_predictor_heads rejects an empty extension") {
    DyMeCu mod(small_config(), 43);
    CHECK_THROWS_AS(mod.with_predictor_heads({}), std::invalid_argument);
}

TEST_CASE("reward normalization") {
    SUBCASE("off: identity") {
        auto cfg = small_config();
        cfg.normalize = false;
        DyMeCu mod(cfg, 44);
        CHECK(mod.normalize_reward(3.5) == 3.5);
    }
    SUBCASE("first observation is finite") {
        auto cfg = small_config();
        cfg.normalize = true;
        DyMeCu mod(cfg, 45);
        const double v = mod.normalize_reward(2.0);
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(2.0 / (2.0 + 1e-8)));
    }
    SUBCASE("constant stream normalizes toward 1") {
        auto cfg = small_config();
        cfg.normalize = true;
        DyMeCu mod(cfg, 46);
        double v = 0.0;
        for (int i = 0; i < 1000; ++i) v = mod.normalize_reward(0.125);
        CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("raw rewards are never negative") {
    DyMeCu mod(small_config(), 47);
    Rng rng(13);
    std::vector<std::vector<double>> states;
    for (int i = 0; i < 64; ++i) states.push_back(random_vec(rng, 4, -3.0, 3.0));
    const StateBatch batch{states};
    for (double r : mod.raw_rewards(batch)) CHECK(r >= 0.0);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    DyMeCu mod(small_config(), 48);
    // push the state away from init so the round-trip is non-trivial
    std::vector<std::vector<double>> batch{{0.1, 0.2, 0.3, 0.4}, {0.9, -0.9, 0.5, -0.5}};
    for (int i = 0; i < 5; ++i) {
        mod.update_learners(batch);
        mod.consolidate_memory();
    }
    mod.normalize_reward(0.7);
    const auto j = mod.checkpoint();
    const auto text = j.dump();
    const auto restored = DyMeCu::from_checkpoint(nlohmann::json::parse(text));
    CHECK(restored->theta1().values == mod.theta1().values);
    CHECK(restored->theta2().values == mod.theta2().values);
    CHECK(restored->omega().values == mod.omega().values);
    CHECK(restored->reward_stat() == mod.reward_stat());
    // the restored module behaves identically
    const std::vector<double> s{0.2, 0.4, -0.6, 0.8};
    CHECK(restored->raw_reward(s) == mod.raw_reward(s));
}
