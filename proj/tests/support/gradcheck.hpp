// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference check of truncated BPTT, shared by the unit
// tests and the acceptance binary.

#ifndef ACTRNN_TESTS_GRADCHECK_HPP
#define ACTRNN_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "actrnn/autodiff.hpp"
#include "actrnn/cells.hpp"

namespace actrnn::testing {

/// Small dimensions covering every optional part of a cell.
inline CellSpec small_spec(CellKind kind) {
  CellSpec s;
  s.kind = kind;
  s.hidden = 4;
  s.obs_dim = 3;
  s.num_actions = 3;
  s.outputs = 2;
  s.factors = 3;
  s.action_embed = 2;
  s.experts = 2;
  s.gate_hidden = 3;
  return s;
}

/// Xavier init, then every scalar (biases, s0, lambda, theta included)
/// jittered so no parameter sits at a symmetric point.
inline CellParams jittered_params(const CellSpec& spec, Rng& rng, double jitter = 0.3) {
  CellParams p = init_params(spec, rng);
  for (auto& a : p.values.arrays())
    for (double& v : a.values) v += uniform(rng, -jitter, jitter);
  return p;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<array>[i]" or "h_init[i]"
  std::size_t checked = 0;
};

/// Relative error with an absolute floor: coordinates whose magnitude is
/// below `floor` are compared at floor scale.
inline double rel_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Loss L = <c, head output after unrolling `window` from h_init>. Compares
/// bptt_backward against central differences for every parameter and every
/// coordinate of h_init.
inline GradCheckResult check_gradients(CellParams params, const std::vector<double>& h_init,
                                       const std::vector<StepInput>& window,
                                       const std::vector<double>& c, double eps = 1e-6) {
  const std::size_t tau = window.size();
  Unroll u;
  u.run(params, h_init, window, tau);
  GradientSet g = bptt_backward(u, c);

  auto loss = [&](const CellParams& p, const std::vector<double>& h0) {
    Unroll f;
    f.run(p, h0, window, tau);
    double l = 0.0;
    auto out = f.output();
    for (std::size_t i = 0; i < c.size(); ++i) l += c[i] * out[i];
    return l;
  };

  GradCheckResult r;
  auto consider = [&](double analytic, double numeric, std::string where) {
    const double e = rel_error(analytic, numeric);
    ++r.checked;
    if (e >= r.max_rel_error) {
      r.max_rel_error = e;
      r.worst = std::move(where);
    }
  };

  for (ParamId id = 0; id < params.values.num_arrays(); ++id) {
    auto& values = params.values[id].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + eps;
      const double up = loss(params, h_init);
      values[i] = keep - eps;
      const double down = loss(params, h_init);
      values[i] = keep;
      consider(g.params[id].values[i], (up - down) / (2 * eps),
               params.values[id].name + "[" + std::to_string(i) + "]");
    }
  }
  std::vector<double> h = h_init;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double keep = h[i];
    h[i] = keep + eps;
    const double up = loss(params, h);
    h[i] = keep - eps;
    const double down = loss(params, h);
    h[i] = keep;
    consider(g.h_init[i], (up - down) / (2 * eps), "h_init[" + std::to_string(i) + "]");
  }
  return r;
}

/// Random window of length T, random h_init in (-0.5, 0.5), random c; then
/// check_gradients.
inline GradCheckResult check_kind(CellKind kind, std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  CellSpec spec = small_spec(kind);
  CellParams params = jittered_params(spec, rng);
  std::vector<std::vector<double>> obs(T, std::vector<double>(spec.obs_dim));
  std::vector<StepInput> window;
  for (std::size_t t = 0; t < T; ++t) {
    for (double& o : obs[t]) o = uniform(rng, -1.0, 1.0);
    window.push_back({obs[t], uniform_index(rng, spec.num_actions)});
  }
  std::vector<double> h(spec.state_size());
  for (double& v : h) v = uniform(rng, -0.5, 0.5);
  std::vector<double> c(spec.outputs);
  for (double& v : c) v = uniform(rng, -1.0, 1.0);
  return check_gradients(std::move(params), h, window, c);
}

}  // namespace actrnn::testing

#endif  // ACTRNN_TESTS_GRADCHECK_HPP
