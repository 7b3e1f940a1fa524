// SPDX-License-Identifier: Apache-2.0

#ifndef ACTRNN_PARAMS_HPP
#define ACTRNN_PARAMS_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace actrnn {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) from the top 53 bits of the engine output, so
/// sequences are identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}
/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// A named learnable array. `shape` is descriptive only (1, 2 or 3 dims);
/// values are flat.
struct ParamArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

using ParamId = std::uint32_t;

/// Ordered collection of learnable arrays. Optimizers and checkpoints treat
/// it uniformly; the cell layout holds ParamIds into it.
class ParamSet {
 public:
  ParamId add(std::string name, std::vector<std::size_t> shape);

  std::size_t num_arrays() const { return arrays_.size(); }
  std::size_t total_size() const;

  ParamArray& operator[](ParamId id) { return arrays_[id]; }
  const ParamArray& operator[](ParamId id) const { return arrays_[id]; }

  std::span<ParamArray> arrays() { return arrays_; }
  std::span<const ParamArray> arrays() const { return arrays_; }

  /// Id of the array called `name`; throws if absent.
  ParamId find(const std::string& name) const;

  /// A zero-filled ParamSet with identical names and shapes.
  ParamSet zeros_like() const;
  void fill(double v);
  bool same_layout(const ParamSet& other) const;
  bool all_finite() const;

 private:
  std::vector<ParamArray> arrays_;
};

/// Fills `values` (rows x cols, row-major) with Xavier-uniform entries,
/// bound sqrt(6 / (rows + cols)).
void xavier_uniform(std::span<double> values, std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace actrnn

#endif  // ACTRNN_PARAMS_HPP
