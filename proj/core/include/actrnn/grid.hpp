// SPDX-License-Identifier: Apache-2.0
//
// Hyperparameter grids. Ranges use the (x:y:z) notation: start at x, add y
// while not past z, so (1:2:5) = [1, 3, 5]; a prefix c*b^ maps each element
// e to c * b^e, e.g. 0.1*1.6^(-16:3:-2).

#ifndef ACTRNN_GRID_HPP
#define ACTRNN_GRID_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actrnn/config.hpp"

namespace actrnn {

/// x, x+y, ... up to and including z (y may be negative; y = 0 rejected).
std::vector<double> arange_inclusive(double x, double y, double z);

/// Expands "(x:y:z)", "b^(x:y:z)", "c*b^(x:y:z)" and "c*(b^(x:y:z))".
/// Throws ConfigError on anything else.
std::vector<double> expand_grid_notation(std::string_view text);

struct SweepPoint {
  std::size_t index = 0;
  /// (key path, value as compact JSON) for every swept axis.
  std::vector<std::pair<std::string, std::string>> assignments;
  ExperimentConfig config;
};

/// A sweep document is {"base": <config>, "grid": {"dotted.key": values}}
/// where values is a list (objects are merged into object-valued keys) or a
/// range string. A plain config is a one-point sweep. Points are the
/// Cartesian product over axes in sorted key order, first axis outermost.
std::vector<SweepPoint> expand_sweep(std::string_view json_text);

/// Names of the swept keys, in axis order.
std::vector<std::string> sweep_axes(std::string_view json_text);

}  // namespace actrnn

#endif  // ACTRNN_GRID_HPP
