// SPDX-License-Identifier: Apache-2.0

#ifndef ACTRNN_OPTIM_HPP
#define ACTRNN_OPTIM_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "actrnn/params.hpp"

namespace actrnn {

/// Raised when an update sees a non-finite gradient. The parameters are left
/// untouched; callers mark the run as diverged.
class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kOptimizerEpsilon = 1e-8;

enum class OptimizerKind { kRmsprop, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kRmsprop;
  double lr = 1e-3;
  double rho = 0.9;    // RMSprop decay
  double beta1 = 0.9;  // ADAM
  double beta2 = 0.999;
  double epsilon = kOptimizerEpsilon;
  /// Global L2-norm clip applied before the update; 0 disables it.
  double max_grad_norm = 0.0;
};

/// Per-array accumulators: RMSprop uses `second`, ADAM uses both moments and
/// the step counter. Zero-initialized.
struct OptimizerState {
  ParamSet first;
  ParamSet second;
  std::uint64_t t = 0;

  static OptimizerState for_params(const ParamSet& params);
};

/// v <- rho v + (1 - rho) g^2;  theta <- theta - lr g / (sqrt(v) + eps)
void rmsprop_step(OptimizerState& state, ParamSet& params, const ParamSet& grads, double lr,
                  double rho, double eps = kOptimizerEpsilon);

/// Bias-corrected ADAM.
void adam_step(OptimizerState& state, ParamSet& params, const ParamSet& grads, double lr,
               double beta1, double beta2, double eps = kOptimizerEpsilon);

/// Dispatches on config.kind, applying the optional norm clip first.
/// Throws DivergedError (params unchanged) if any gradient is non-finite.
void optimizer_step(const OptimizerConfig& config, OptimizerState& state, ParamSet& params,
                    const ParamSet& grads);

double global_norm(const ParamSet& grads);

}  // namespace actrnn

#endif  // ACTRNN_OPTIM_HPP
