#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "batchrl/harness.hpp"
#include "batchrl/instances.hpp"
#include "batchrl/mdp.hpp"

namespace batchrl::io {

using nlohmann::json;

/// {"n_states", "n_actions", "transition": [[[..]]], "reward": [[{"mean", "noise": "det"|"gauss1"}]]}
json to_json(const Mdp& m);
/// Parses and validates an MDP document.
Mdp mdp_from_json(const json& j);

/// {"kind": "stationary"|"stage_indexed", "n_states", "n_actions", "probs": [[..]] or [[[..]]]}
json to_json(const Policy& pi);
Policy policy_from_json(const json& j);

json to_json(const Criterion& crit);
Criterion criterion_from_json(const json& j);

json to_json(const InstancePair& pair);
InstancePair pair_from_json(const json& j);

json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& j);

/// "discounted:G", "finite:H" or "average".
Criterion parse_criterion(std::string_view text);
/// "point:K" or "uniform".
InitialDist parse_initial(std::string_view text, std::size_t states);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

} // namespace batchrl::io
