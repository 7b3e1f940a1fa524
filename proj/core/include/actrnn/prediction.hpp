// SPDX-License-Identifier: Apache-2.0
//
// GVF prediction: a horde of state-terminating discounted predictions of the
// Ring World bit, learned off-policy with semi-gradient TD(0) through the
// recurrent state.

#ifndef ACTRNN_PREDICTION_HPP
#define ACTRNN_PREDICTION_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "actrnn/envs.hpp"
#include "actrnn/learner.hpp"
#include "actrnn/replay.hpp"

namespace actrnn {

/// Cumulant: observation bit `cumulant_index` of o'. Continuation: gamma,
/// dropped to 0 when that bit is on. Target policy: always `target_action`.
struct GVFSpec {
  double gamma = 0.0;
  std::size_t target_action = 0;
  std::size_t cumulant_index = 0;
};

struct Horde {
  std::vector<GVFSpec> gvfs;

  std::size_t size() const { return gvfs.size(); }
  /// gamma in {0.0, ..., 0.9} for clockwise, then the same for
  /// counter-clockwise: 20 GVFs.
  static Horde ring_world();
};

struct TDTargets {
  std::vector<double> y;
  std::vector<double> rho;
};

/// y_i = c'_i + gamma'_i v_next_i and rho_i = pi_i(a) / b(a) for the
/// transition's action under a behavior that chose it with probability
/// `behavior_prob`.
TDTargets td0_targets(const Horde& horde, std::span<const double> v_next, const Transition& t,
                      double behavior_prob);

/// sum_i rho_i (v_i - y_i)^2, with 2 rho_i (v_i - y_i) written to `grad`.
double weighted_squared_error(std::span<const double> v, const TDTargets& targets,
                              std::span<double> grad);

enum class RmsveKind {
  kNormOverCount,  // ||e||_2 / |V|
  kRootMean,       // sqrt(mean(e^2))
};

double rmsve(std::span<const double> predictions, std::span<const double> oracle,
             RmsveKind kind = RmsveKind::kNormOverCount);

/// Oracle values of every GVF in a Ring World state.
std::vector<double> horde_oracle(const Horde& horde, std::size_t ring_size, std::size_t position);

struct PredictionSettings {
  std::size_t tau = 1;
  std::size_t batch_size = 4;
  std::size_t update_every = 4;
  std::size_t warmup = 1000;
  std::size_t capacity = 1000;
  StateMode state_mode = StateMode::kRefresh;
  SequenceAnchor anchor = SequenceAnchor::kEnd;
  bool online = false;
  std::size_t target_sync = 1000;
  RmsveKind rmsve_kind = RmsveKind::kNormOverCount;
};

/// Result of one environment step of the prediction agent.
struct PredictionStep {
  double rmsve = 0.0;
  bool updated = false;
  double loss = 0.0;
};

class PredictionAgent {
 public:
  PredictionAgent(CellParams params, OptimizerConfig optimizer, PredictionSettings settings,
                  Horde horde);

  /// Acts once under the equiprobable behavior policy: updates the state with
  /// the current observation, scores the predictions against the oracle,
  /// steps the environment, stores the transition and learns when due.
  PredictionStep step(RingWorld& env, Rng& env_rng, Rng& behavior_rng, Rng& replay_rng);

  /// One replay (or online) update; exposed for tests.
  double update(Rng& replay_rng);

  const RecurrentLearner& learner() const { return learner_; }
  RecurrentLearner& learner() { return learner_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  ReplayBuffer& buffer() { return buffer_; }
  const Horde& horde() const { return horde_; }
  std::span<const double> hidden() const { return h_; }
  std::span<const double> predictions() const { return v_; }
  std::size_t prev_action() const { return prev_action_; }
  std::size_t total_steps() const { return steps_; }

 private:
  RecurrentLearner learner_;
  PredictionSettings settings_;
  Horde horde_;
  ReplayBuffer buffer_;
  OnlineHistory history_;
  bool started_ = false;
  std::vector<double> obs_;
  std::vector<double> h_;
  std::vector<double> v_;
  std::size_t prev_action_ = 0;
  std::size_t steps_ = 0;
};

}  // namespace actrnn

#endif  // ACTRNN_PREDICTION_HPP
