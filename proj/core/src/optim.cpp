// SPDX-License-Identifier: Apache-2.0

#include "actrnn/optim.hpp"

#include <cmath>

#include <fmt/format.h>

namespace actrnn {

namespace {

void check_layout(const OptimizerState& state, const ParamSet& params, const ParamSet& grads) {
  if (!params.same_layout(grads) || !params.same_layout(state.second))
    throw std::invalid_argument("optimizer: parameter, gradient and state layouts differ");
}

void check_finite(const ParamSet& grads) {
  for (const auto& a : grads.arrays())
    for (double v : a.values)
      if (!std::isfinite(v))
        throw DivergedError(fmt::format("non-finite gradient in '{}'", a.name));
}

}  // namespace

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "rmsprop";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "rmsprop") return OptimizerKind::kRmsprop;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument(fmt::format("unknown optimizer '{}'", name));
}

OptimizerState OptimizerState::for_params(const ParamSet& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void rmsprop_step(OptimizerState& state, ParamSet& params, const ParamSet& grads, double lr,
                  double rho, double eps) {
  check_layout(state, params, grads);
  check_finite(grads);
  ++state.t;
  for (std::size_t a = 0; a < params.num_arrays(); ++a) {
    auto& theta = params[a].values;
    auto& v = state.second[a].values;
    const auto& g = grads[a].values;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = rho * v[i] + (1.0 - rho) * g[i] * g[i];
      theta[i] -= lr * g[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

void adam_step(OptimizerState& state, ParamSet& params, const ParamSet& grads, double lr,
               double beta1, double beta2, double eps) {
  check_layout(state, params, grads);
  check_finite(grads);
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t a = 0; a < params.num_arrays(); ++a) {
    auto& theta = params[a].values;
    auto& m = state.first[a].values;
    auto& v = state.second[a].values;
    const auto& g = grads[a].values;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

double global_norm(const ParamSet& grads) {
  double s = 0.0;
  for (const auto& a : grads.arrays())
    for (double v : a.values) s += v * v;
  return std::sqrt(s);
}

void optimizer_step(const OptimizerConfig& config, OptimizerState& state, ParamSet& params,
                    const ParamSet& grads) {
  const ParamSet* g = &grads;
  ParamSet clipped;
  if (config.max_grad_norm > 0.0) {
    check_finite(grads);
    const double norm = global_norm(grads);
    if (norm > config.max_grad_norm) {
      clipped = grads;
      const double scale = config.max_grad_norm / norm;
      for (auto& a : clipped.arrays())
        for (double& v : a.values) v *= scale;
      g = &clipped;
    }
  }
  switch (config.kind) {
    case OptimizerKind::kRmsprop:
      rmsprop_step(state, params, *g, config.lr, config.rho, config.epsilon);
      break;
    case OptimizerKind::kAdam:
      adam_step(state, params, *g, config.lr, config.beta1, config.beta2, config.epsilon);
      break;
  }
}

}  // namespace actrnn
