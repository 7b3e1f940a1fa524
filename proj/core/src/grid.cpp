// SPDX-License-Identifier: Apache-2.0

#include "actrnn/grid.hpp"

#include <cmath>
#include <regex>

#include <fmt/format.h>

#include "config_json.hpp"

namespace actrnn {

using detail::json;

std::vector<double> arange_inclusive(double x, double y, double z) {
  if (y == 0.0 || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
    throw ConfigError(fmt::format("range ({}:{}:{}) does not terminate", x, y, z));
  std::vector<double> out;
  const double tol = 1e-9 * std::max({1.0, std::abs(x), std::abs(z)});
  for (std::size_t k = 0;; ++k) {
    const double v = x + static_cast<double>(k) * y;
    if (y > 0 ? v > z + tol : v < z - tol) break;
    out.push_back(v);
    if (out.size() > 1000000) throw ConfigError("range expands to too many values");
  }
  return out;
}

std::vector<double> expand_grid_notation(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  // Accept the multiplication sign as well as '*'.
  for (std::size_t p; (p = s.find("\xC3\x97")) != std::string::npos;) s.replace(p, 2, "*");
  static const std::string num = R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)";
  static const std::regex re("^(?:(" + num + R"()\*)?(\()?(?:()" + num + R"()\^)?\(()" + num +
                             "):(" + num + "):(" + num + R"()\)(\))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, re) || m[2].matched != m[7].matched)
    throw ConfigError(fmt::format("cannot parse range '{}'", text));
  const double c = m[1].matched ? std::stod(m[1].str()) : 1.0;
  const bool has_base = m[3].matched;
  const double b = has_base ? std::stod(m[3].str()) : 0.0;
  auto exps = arange_inclusive(std::stod(m[4].str()), std::stod(m[5].str()), std::stod(m[6].str()));
  std::vector<double> out;
  for (double e : exps) out.push_back(has_base ? c * std::pow(b, e) : c * e);
  return out;
}

namespace {

struct Axis {
  std::string key;
  std::vector<json> values;
};

json& locate(json& root, const std::string& dotted) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError(fmt::format("bad sweep key '{}'", dotted));
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) return *node;
    start = dot + 1;
  }
}

std::pair<json, std::vector<Axis>> parse_sweep(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("sweep file is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigError("sweep file must be a JSON object");
  if (!doc.contains("base")) return {doc, {}};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "base" && it.key() != "grid")
      throw ConfigError(fmt::format("sweep: unknown key '{}'", it.key()));
  std::vector<Axis> axes;
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    if (!g.is_object()) throw ConfigError("sweep.grid must be an object");
    for (auto it = g.begin(); it != g.end(); ++it) {
      Axis axis{it.key(), {}};
      if (it->is_string()) {
        // Integral range values stay integers so count-valued keys accept them.
        for (double v : expand_grid_notation(it->get<std::string>())) {
          if (v == std::trunc(v) && std::abs(v) < 9.0e15)
            axis.values.push_back(static_cast<long long>(v));
          else
            axis.values.push_back(v);
        }
      } else if (it->is_array()) {
        for (const auto& v : *it) axis.values.push_back(v);
      } else {
        throw ConfigError(fmt::format("sweep.grid.{}: expected a list or a range", it.key()));
      }
      if (axis.values.empty())
        throw ConfigError(fmt::format("sweep.grid.{}: no values", it.key()));
      axes.push_back(std::move(axis));
    }
  }
  return {doc["base"], std::move(axes)};
}

}  // namespace

std::vector<std::string> sweep_axes(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& a : parse_sweep(text).second) out.push_back(a.key);
  return out;
}

std::vector<SweepPoint> expand_sweep(std::string_view text) {
  auto [base, axes] = parse_sweep(text);
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.values.size();
  std::vector<SweepPoint> out;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    json doc = base;
    SweepPoint p;
    p.index = idx;
    std::size_t rem = idx;
    std::size_t stride = total;
    for (const auto& a : axes) {
      stride /= a.values.size();
      const json& v = a.values[rem / stride];
      rem %= stride;
      json& slot = locate(doc, a.key);
      if (v.is_object() && slot.is_object())
        slot.merge_patch(v);
      else
        slot = v;
      p.assignments.emplace_back(a.key, v.dump());
    }
    try {
      p.config = detail::config_from_json(doc);
    } catch (const json::exception& e) {
      throw ConfigError(e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace actrnn
