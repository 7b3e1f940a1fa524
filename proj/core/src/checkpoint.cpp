// SPDX-License-Identifier: Apache-2.0

#include "actrnn/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "config_json.hpp"

namespace actrnn {

using detail::json;

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  json j;
  j["format"] = "actrnn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["step"] = ckpt.step;
  j["config"] = detail::config_to_json(ckpt.config);
  json arrays = json::array();
  for (const auto& a : ckpt.params.values.arrays())
    arrays.push_back({{"name", a.name}, {"shape", a.shape}, {"values", a.values}});
  j["arrays"] = std::move(arrays);
  return j.dump(1);
}

Checkpoint checkpoint_from_string(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw std::runtime_error(fmt::format("checkpoint is not valid JSON: {}", e.what()));
  }
  if (j.value("format", "") != "actrnn-checkpoint")
    throw std::runtime_error("not an actrnn checkpoint");
  if (j.value("version", -1) != kCheckpointVersion)
    throw std::runtime_error(fmt::format("unsupported checkpoint version {}", j.value("version", -1)));

  Checkpoint ck;
  ck.config = detail::config_from_json(j.at("config"));
  ck.step = j.at("step").get<std::size_t>();
  // Rebuild the layout from the spec, then overwrite every array.
  Rng scratch(0);
  ck.params = init_params(ck.config.cell, scratch);
  const json& arrays = j.at("arrays");
  if (!arrays.is_array() || arrays.size() != ck.params.values.num_arrays())
    throw std::runtime_error("checkpoint array count does not match the cell layout");
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    ParamArray& p = ck.params.values[static_cast<ParamId>(i)];
    const json& a = arrays[i];
    if (a.at("name").get<std::string>() != p.name ||
        a.at("shape").get<std::vector<std::size_t>>() != p.shape)
      throw std::runtime_error(fmt::format("checkpoint array {} does not match '{}'", i, p.name));
    auto values = a.at("values").get<std::vector<double>>();
    if (values.size() != p.values.size())
      throw std::runtime_error(fmt::format("checkpoint array '{}' has the wrong length", p.name));
    p.values = std::move(values);
  }
  if (!ck.params.values.all_finite()) throw std::runtime_error("checkpoint holds non-finite values");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write checkpoint '{}'", path.string()));
  out << checkpoint_to_string(ckpt) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open checkpoint '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return checkpoint_from_string(ss.str());
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format("malformed checkpoint: {}", e.what()));
  }
}

}  // namespace actrnn
