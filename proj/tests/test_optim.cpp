#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "dymecu/optim.hpp"
#include "dymecu/running_stat.hpp"

using namespace dymecu;

namespace {

ParamVector scalar_param(double v) {
    ParamVector p;
    p.layout.layers = {{1, 0}}; // bias-only layer holding one value
    p.values = {v};
    return p;
}

ParamVector vec_param(std::vector<double> vs) {
    ParamVector p;
    p.layout.layers = {{static_cast<int>(vs.size()), 0}};
    p.values = std::move(vs);
    return p;
}

} // namespace

TEST_CASE("sgd with zero gradient leaves parameters unchanged") {
    auto p = scalar_param(1.0);
    auto g = scalar_param(0.0);
    auto st = make_sgd();
    optimizer_step(p, g, st, 0.1);
    CHECK(p.values[0] == 1.0);
}

TEST_CASE("sgd arithmetic: 1.0 - 0.1 * 0.5 = 0.95") {
    auto p = scalar_param(1.0);
    auto g = scalar_param(0.5);
    auto st = make_sgd();
    optimizer_step(p, g, st, 0.1);
    CHECK(p.values[0] == doctest::Approx(0.95).epsilon(1e-15));
}

TEST_CASE("optimizer_step rejects bad inputs") {
    auto p = scalar_param(1.0);
    auto g = vec_param({1.0, 2.0});
    auto st = make_sgd();
    CHECK_THROWS_AS(optimizer_step(p, g, st, 0.1), std::invalid_argument);
    auto g2 = scalar_param(1.0);
    CHECK_THROWS_AS(optimizer_step(p, g2, st, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(optimizer_step(p, g2, st, -1.0), std::invalid_argument);
}

TEST_CASE("adam descends a quadratic bowl monotonically") {
    // f(p) = sum p_i^2, grad = 2p
    auto p = vec_param({3.0, -2.0, 1.5, -0.5});
    auto st = make_adam();
    auto loss = [&]() {
        double acc = 0.0;
        for (double v : p.values) acc += v * v;
        return acc;
    };
    double prev = loss();
    for (int i = 0; i < 100; ++i) {
        ParamVector g = p;
        for (auto& v : g.values) v *= 2.0;
        optimizer_step(p, g, st, 0.05);
        const double cur = loss();
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK(prev < 1.0);
}

TEST_CASE("ema_blend with alpha=1 keeps the target") {
    auto t = vec_param({1.0, -2.0, 3.0});
    auto s1 = vec_param({5.0, 5.0, 5.0});
    const auto out = ema_blend(t, {&s1}, 1.0);
    CHECK(out.values == t.values);
}

TEST_CASE("ema_blend with alpha=0 is the element-wise mean of the sources") {
    auto t = vec_param({9.0, 9.0});
    auto s1 = vec_param({1.0, 3.0});
    auto s2 = vec_param({3.0, 5.0});
    const auto out = ema_blend(t, {&s1, &s2}, 0.0);
    CHECK(out.values[0] == 2.0);
    CHECK(out.values[1] == 4.0);
}

TEST_CASE("ema_blend at the default decay 0.99 moves 1% toward the mean") {
    auto t = vec_param({0.0});
    auto s1 = vec_param({1.0});
    auto s2 = vec_param({1.0});
    const auto out = ema_blend(t, {&s1, &s2}, 0.99);
    CHECK(out.values[0] == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("ema_blend output stays inside the target/mean interval") {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        std::vector<double> tv(n), av(n), bv(n);
        for (std::size_t i = 0; i < n; ++i) {
            tv[i] = rng.uniform(-10.0, 10.0);
            av[i] = rng.uniform(-10.0, 10.0);
            bv[i] = rng.uniform(-10.0, 10.0);
        }
        auto t = vec_param(tv);
        auto a = vec_param(av);
        auto b = vec_param(bv);
        const double alpha = rng.uniform();
        const auto out = ema_blend(t, {&a, &b}, alpha);
        for (std::size_t i = 0; i < n; ++i) {
            const double mean = (av[i] + bv[i]) / 2.0;
            const double lo = std::min(tv[i], mean);
            const double hi = std::max(tv[i], mean);
            const double slack = 1e-12 * (std::abs(lo) + std::abs(hi) + 1.0);
            CHECK(out.values[i] >= lo - slack);
            CHECK(out.values[i] <= hi + slack);
        }
    }
}

TEST_CASE("ema_blend validates its contract") {
    auto t = vec_param({1.0});
    auto s = vec_param({2.0});
    CHECK_THROWS_AS(ema_blend(t, {&s}, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(ema_blend(t, {&s}, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(ema_blend(t, {}, 0.5), std::invalid_argument);
    auto wrong = vec_param({1.0, 2.0});
    CHECK_THROWS_AS(ema_blend(t, {&wrong}, 0.5), std::invalid_argument);
}

TEST_CASE("running stat tracks mean, variance and rms") {
    RunningStat st;
    for (double x : {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) st.push(x);
    CHECK(st.mean == doctest::Approx(5.0));
    CHECK(st.variance() == doctest::Approx(4.0));
    CHECK(st.stddev() == doctest::Approx(2.0));
    CHECK(st.rms() == doctest::Approx(std::sqrt(29.0)));
}
