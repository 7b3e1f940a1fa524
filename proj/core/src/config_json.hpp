// SPDX-License-Identifier: Apache-2.0
//
// JSON conversions shared by the config, sweep and checkpoint code.

#ifndef ACTRNN_SRC_CONFIG_JSON_HPP
#define ACTRNN_SRC_CONFIG_JSON_HPP

#include <json.hpp>

#include "actrnn/config.hpp"

namespace actrnn::detail {

using json = nlohmann::json;

json config_to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const json& j);

json spec_to_json(const CellSpec& spec);
CellSpec spec_from_json(const json& j);

}  // namespace actrnn::detail

#endif  // ACTRNN_SRC_CONFIG_JSON_HPP
