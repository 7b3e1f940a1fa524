// SPDX-License-Identifier: Apache-2.0
//
// Truncated BPTT: unroll a cell over a window of at most tau steps from a
// given initial state, then push a loss gradient taken at the head output of
// the final step back through every step and into the initial state.

#ifndef ACTRNN_AUTODIFF_HPP
#define ACTRNN_AUTODIFF_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "actrnn/cells.hpp"
#include "actrnn/params.hpp"
#include "actrnn/tape.hpp"

namespace actrnn {

/// One unrolled step: the observation o_t and the action taken before it.
struct StepInput {
  std::span<const double> obs;
  std::size_t prev_action = 0;
};

/// Gradients shaped like CellParams::values plus the initial-state gradient.
struct GradientSet {
  ParamSet params;
  std::vector<double> h_init;

  static GradientSet zeros_like(const CellParams& p);
  void clear();
  bool all_finite() const;
};

/// A recorded forward pass. Reusable: run() clears the previous recording.
class Unroll {
 public:
  /// h_t = cell(h_{t-1}, o_t, a_{t-1}) for every step of `window`, then the
  /// head applied to the last state. Requires 1 <= window.size() <= tau.
  void run(const CellParams& params, std::span<const double> h_init,
           std::span<const StepInput> window, std::size_t tau);

  std::size_t length() const { return states_.size(); }
  /// h_t for t in [1, length()].
  std::span<const double> hidden(std::size_t t) const;
  std::span<const double> final_hidden() const { return hidden(length()); }
  std::span<const double> output() const;
  const Tape& tape() const { return tape_; }
  bool consumed() const { return tape_.consumed(); }

 private:
  friend std::vector<double> bptt_backward_into(Unroll&, std::span<const double>, ParamSet&);
  friend GradientSet bptt_backward(Unroll&, std::span<const double>);
  Tape tape_;
  Var h_init_;
  std::vector<Var> states_;
  Var output_;
};

Unroll unroll_forward(const CellParams& params, std::span<const double> h_init,
                      std::span<const StepInput> window, std::size_t tau);

/// Gradient of the loss whose derivative with respect to the final head
/// output is `loss_grad`. Consumes the unroll's tape.
GradientSet bptt_backward(Unroll& unroll, std::span<const double> loss_grad);

/// As bptt_backward, but adds parameter gradients into `accum` (batch sums)
/// and returns only the initial-state gradient.
std::vector<double> bptt_backward_into(Unroll& unroll, std::span<const double> loss_grad,
                                       ParamSet& accum);

/// Forward-only unroll returning the final state, with no tape retained.
std::vector<double> unroll_final_state(const CellParams& params, std::span<const double> h_init,
                                       std::span<const StepInput> window);

}  // namespace actrnn

#endif  // ACTRNN_AUTODIFF_HPP
