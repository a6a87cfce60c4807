#pragma once

#include <json.hpp>

#include "dymecu/mlp.hpp"
#include "dymecu/optim.hpp"
#include "dymecu/running_stat.hpp"

namespace dymecu::detail {

// JSON encodings shared by every module checkpoint. Doubles are stored as
// plain JSON numbers; the serializer emits shortest round-trip
// representations, so parameter round-trips are bit-exact.

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const ParamVector& p);
ParamVector params_from_json(const nlohmann::json& j);

nlohmann::json opt_to_json(const OptState& s);
OptState opt_from_json(const nlohmann::json& j);

nlohmann::json stat_to_json(const RunningStat& s);
RunningStat stat_from_json(const nlohmann::json& j);

} // namespace dymecu::detail
