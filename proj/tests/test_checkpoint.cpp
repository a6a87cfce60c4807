#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dymecu/checkpoint.hpp"

using namespace dymecu;

TEST_CASE("json doubles round-trip bit-exactly") {
    Rng rng(314);
    std::vector<double> values;
    for (int i = 0; i < 2000; ++i) {
        // spread across magnitudes, including tiny and large
        const double mag = std::pow(10.0, rng.uniform(-300.0, 300.0));
        values.push_back((rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform() * mag);
    }
    values.push_back(0.0);
    values.push_back(-0.0);
    values.push_back(1e-308);
    values.push_back(0.1 + 0.2);

    const nlohmann::json j = values;
    const auto back = nlohmann::json::parse(j.dump()).get<std::vector<double>>();
    REQUIRE(back.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t a, b;
        std::memcpy(&a, &values[i], 8);
        std::memcpy(&b, &back[i], 8);
        CHECK(a == b);
    }
}

TEST_CASE("parameter containers round-trip layout and values") {
    MlpSpec spec{5, {7, 3}, 2, Activation::tanh};
    const auto p = init_params(spec, 999);
    const auto j = detail::params_to_json(p);
    const auto back = detail::params_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.layout == p.layout);
    CHECK(back.values == p.values);
}

TEST_CASE("corrupt parameter payloads are rejected") {
    MlpSpec spec{2, {}, 2, Activation::relu};
    auto j = detail::params_to_json(init_params(spec, 1));
    j["values"].erase(0);
    CHECK_THROWS_AS(detail::params_from_json(j), std::invalid_argument);
}

TEST_CASE("optimizer state round-trips") {
    OptState st = make_adam(0.85, 0.98, 1e-7);
    st.step = 41;
    st.m = {0.1, -0.2};
    st.v = {0.01, 0.02};
    const auto back = detail::opt_from_json(nlohmann::json::parse(detail::opt_to_json(st).dump()));
    CHECK(back.mode == st.mode);
    CHECK(back.beta1 == st.beta1);
    CHECK(back.beta2 == st.beta2);
    CHECK(back.eps == st.eps);
    CHECK(back.step == st.step);
    CHECK(back.m == st.m);
    CHECK(back.v == st.v);
}

TEST_CASE("mlp specs round-trip") {
    MlpSpec spec{12, {64, 64}, 32, Activation::relu};
    const auto back = detail::spec_from_json(detail::spec_to_json(spec));
    CHECK(back == spec);
}
