// SPDX-License-Identifier: Apache-2.0
//
// Machinery shared by the prediction and control agents: a recurrent model
// with an optional target copy, allocation-free acting steps, and the
// batched truncated-BPTT update over sequences of transitions.

#ifndef ACTRNN_LEARNER_HPP
#define ACTRNN_LEARNER_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "actrnn/autodiff.hpp"
#include "actrnn/cells.hpp"
#include "actrnn/optim.hpp"
#include "actrnn/replay.hpp"
#include "actrnn/tape.hpp"

namespace actrnn {

/// Forward-only evaluation with a reusable tape.
class CellRunner {
 public:
  /// h' = cell(h, obs, a_prev).
  std::vector<double> step(const CellParams& params, std::span<const double> h,
                           std::span<const double> obs, std::size_t prev_action);
  std::vector<double> head(const CellParams& params, std::span<const double> h);
  /// Final state after unrolling `steps` from h_init.
  std::vector<double> unroll(const CellParams& params, std::span<const double> h_init,
                             std::span<const StepInput> steps);

 private:
  Tape tape_;
};

/// A training sequence: transitions oldest first, the state to start from,
/// and whether that state is the live s0.
struct SequenceItem {
  std::vector<const Transition*> transitions;
  std::vector<double> h_init;
  bool from_s0 = false;
};

SequenceItem make_item(const ReplayBuffer& buffer, const SampledSequence& seq);
SequenceItem make_item(std::span<const Transition* const> window, std::span<const double> s0);

/// Writes d(loss)/d(output) into `grad` and returns the loss for one item.
/// `v` is the head output at the final transition, `v_next` the bootstrap
/// network's head output at the state after it.
using LossFn = std::function<double(std::span<const double> v, std::span<const double> v_next,
                                    const Transition& last, std::span<double> grad)>;

struct UpdateResult {
  double loss = 0.0;  // summed over the batch
  /// One initial-state gradient per item (items starting at s0 included).
  std::vector<std::vector<double>> grad_h_init;
};

class RecurrentLearner {
 public:
  /// target_sync == 0 bootstraps from the current parameters.
  RecurrentLearner(CellParams params, OptimizerConfig optimizer, std::size_t tau,
                   std::size_t target_sync);

  const CellParams& params() const { return params_; }
  CellParams& mutable_params() { return params_; }
  /// Parameters used for bootstrap targets.
  const CellParams& target() const { return target_sync_ ? target_ : params_; }
  const OptimizerConfig& optimizer() const { return optimizer_config_; }
  const OptimizerState& optimizer_state() const { return optimizer_; }
  std::size_t tau() const { return tau_; }
  std::size_t target_sync() const { return target_sync_; }
  void sync_target() { if (target_sync_) target_ = params_; }

  /// Acting with the current parameters.
  std::vector<double> step(std::span<const double> h, std::span<const double> obs,
                           std::size_t prev_action) {
    return runner_.step(params_, h, obs, prev_action);
  }
  std::vector<double> head(std::span<const double> h) { return runner_.head(params_, h); }

  /// Summed semi-gradient over `items`, s0 gradients routed into the s0
  /// parameter, then one optimizer step. Throws NonFiniteError or
  /// DivergedError (parameters untouched) on divergence.
  UpdateResult update(std::span<const SequenceItem> items, const LossFn& loss);

  /// The summed gradient without applying it (for tests and diagnostics).
  UpdateResult gradient(std::span<const SequenceItem> items, const LossFn& loss,
                        ParamSet& grads);

 private:
  CellParams params_;
  CellParams target_;
  OptimizerConfig optimizer_config_;
  OptimizerState optimizer_;
  std::size_t tau_;
  std::size_t target_sync_;
  ParamSet grads_;
  Unroll unroll_;
  CellRunner runner_;
  CellRunner bootstrap_runner_;
  std::vector<StepInput> window_;
  std::vector<double> loss_grad_;
};

}  // namespace actrnn

#endif  // ACTRNN_LEARNER_HPP
