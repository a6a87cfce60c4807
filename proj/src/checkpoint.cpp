#include "dymecu/checkpoint.hpp"

#include <stdexcept>

namespace dymecu::detail {

using nlohmann::json;

json spec_to_json(const MlpSpec& spec) {
    return json{{"input_dim", spec.input_dim},
                {"hidden_dims", spec.hidden_dims},
                {"output_dim", spec.output_dim},
                {"activation", to_string(spec.activation)}};
}

MlpSpec spec_from_json(const json& j) {
    MlpSpec s;
    s.input_dim = j.at("input_dim").get<int>();
    s.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
    s.output_dim = j.at("output_dim").get<int>();
    s.activation = activation_from_string(j.at("activation").get<std::string>());
    return s;
}

json params_to_json(const ParamVector& p) {
    json layers = json::array();
    for (const auto& l : p.layout.layers) layers.push_back(json{{"out", l.out}, {"in", l.in}});
    return json{{"layout", layers}, {"values", p.values}};
}

ParamVector params_from_json(const json& j) {
    ParamVector p;
    for (const auto& l : j.at("layout"))
        p.layout.layers.push_back({l.at("out").get<int>(), l.at("in").get<int>()});
    p.values = j.at("values").get<std::vector<double>>();
    if (p.values.size() != p.layout.total())
        throw std::invalid_argument("checkpoint: parameter count does not match layout");
    return p;
}

json opt_to_json(const OptState& s) {
    return json{{"mode", s.mode == OptMode::adam ? "adam" : "sgd"},
                {"beta1", s.beta1},
                {"beta2", s.beta2},
                {"eps", s.eps},
                {"step", s.step},
                {"m", s.m},
                {"v", s.v}};
}

OptState opt_from_json(const json& j) {
    OptState s;
    s.mode = j.at("mode").get<std::string>() == "sgd" ? OptMode::sgd : OptMode::adam;
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
    s.step = j.at("step").get<long>();
    s.m = j.at("m").get<std::vector<double>>();
    s.v = j.at("v").get<std::vector<double>>();
    return s;
}

json stat_to_json(const RunningStat& s) {
    return json{{"count", s.count}, {"mean", s.mean}, {"m2", s.m2}};
}

RunningStat stat_from_json(const json& j) {
    RunningStat s;
    s.count = j.at("count").get<std::int64_t>();
    s.mean = j.at("mean").get<double>();
    s.m2 = j.at("m2").get<double>();
    return s;
}

} // namespace dymecu::detail
