// SPDX-License-Identifier: Apache-2.0

#include "actrnn/params.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace actrnn {

ParamId ParamSet::add(std::string name, std::vector<std::size_t> shape) {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  arrays_.push_back(ParamArray{std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  return static_cast<ParamId>(arrays_.size() - 1);
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) n += a.size();
  return n;
}

ParamId ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name == name) return static_cast<ParamId>(i);
  }
  throw std::out_of_range("no parameter array named '" + name + "'");
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  out.fill(0.0);
  return out;
}

void ParamSet::fill(double v) {
  for (auto& a : arrays_) std::fill(a.values.begin(), a.values.end(), v);
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (arrays_.size() != other.arrays_.size()) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name != other.arrays_[i].name || arrays_[i].shape != other.arrays_[i].shape)
      return false;
  }
  return true;
}

bool ParamSet::all_finite() const {
  for (const auto& a : arrays_)
    for (double v : a.values)
      if (!std::isfinite(v)) return false;
  return true;
}

void xavier_uniform(std::span<double> values, std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : values) v = uniform(rng, -bound, bound);
}

}  // namespace actrnn
