// SPDX-License-Identifier: Apache-2.0

#include "actrnn/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace actrnn {

GradientSet GradientSet::zeros_like(const CellParams& p) {
  return {p.values.zeros_like(), std::vector<double>(p.spec.state_size(), 0.0)};
}

void GradientSet::clear() {
  params.fill(0.0);
  std::fill(h_init.begin(), h_init.end(), 0.0);
}

bool GradientSet::all_finite() const {
  if (!params.all_finite()) return false;
  for (double v : h_init)
    if (!std::isfinite(v)) return false;
  return true;
}

void Unroll::run(const CellParams& params, std::span<const double> h_init,
                 std::span<const StepInput> window, std::size_t tau) {
  if (window.empty() || window.size() > tau) {
    throw std::invalid_argument(
        fmt::format("unroll window length {} outside [1, {}]", window.size(), tau));
  }
  tape_.reset(params.values);
  states_.clear();
  h_init_ = tape_.leaf(h_init);
  Var h = h_init_;
  for (std::size_t t = 0; t < window.size(); ++t) {
    tape_.set_step(t + 1);
    Var obs = tape_.constant(window[t].obs);
    Var a = record_action(
        tape_, params, ActionEncoding::onehot(window[t].prev_action, params.spec.num_actions));
    h = record_cell_step(tape_, params, h, obs, a);
    states_.push_back(h);
  }
  output_ = record_head(tape_, params, h);
}

std::span<const double> Unroll::hidden(std::size_t t) const {
  if (t == 0 || t > states_.size())
    throw std::out_of_range(fmt::format("hidden({}) outside [1, {}]", t, states_.size()));
  return tape_.value(states_[t - 1]);
}

std::span<const double> Unroll::output() const { return tape_.value(output_); }

Unroll unroll_forward(const CellParams& params, std::span<const double> h_init,
                      std::span<const StepInput> window, std::size_t tau) {
  Unroll u;
  u.run(params, h_init, window, tau);
  return u;
}

std::vector<double> bptt_backward_into(Unroll& unroll, std::span<const double> loss_grad,
                                       ParamSet& accum) {
  if (unroll.tape_.consumed()) throw std::logic_error("BPTT tape reused after backward");
  unroll.tape_.backward(unroll.output_, loss_grad, accum);
  auto g = unroll.tape_.grad(unroll.h_init_);
  for (double v : g) {
    if (!std::isfinite(v)) throw NonFiniteError(0, "backward");
  }
  return {g.begin(), g.end()};
}

GradientSet bptt_backward(Unroll& unroll, std::span<const double> loss_grad) {
  if (unroll.states_.empty()) throw std::logic_error("bptt_backward on an empty unroll");
  GradientSet out;
  out.params = unroll.tape_.bound_params()->zeros_like();
  out.h_init = bptt_backward_into(unroll, loss_grad, out.params);
  return out;
}

std::vector<double> unroll_final_state(const CellParams& params, std::span<const double> h_init,
                                       std::span<const StepInput> window) {
  Tape tape(params.values);
  Var h = tape.constant(h_init);
  for (std::size_t t = 0; t < window.size(); ++t) {
    tape.set_step(t + 1);
    Var obs = tape.constant(window[t].obs);
    Var a = record_action(
        tape, params, ActionEncoding::onehot(window[t].prev_action, params.spec.num_actions));
    h = record_cell_step(tape, params, h, obs, a);
  }
  auto v = tape.value(h);
  return {v.begin(), v.end()};
}

}  // namespace actrnn
