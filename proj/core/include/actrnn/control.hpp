// SPDX-License-Identifier: Apache-2.0
//
// Recurrent Q-learning: epsilon-greedy acting with a carried hidden state,
// replayed truncated-BPTT updates against a periodically synced target
// network, and scripted forced-action interventions.

#ifndef ACTRNN_CONTROL_HPP
#define ACTRNN_CONTROL_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "actrnn/envs.hpp"
#include "actrnn/learner.hpp"
#include "actrnn/replay.hpp"

namespace actrnn {

/// argmax with ties going to the lowest index.
std::size_t greedy_action(std::span<const double> q);

/// With probability epsilon a uniform action, else greedy_action(q).
std::size_t select_action(std::span<const double> q, double epsilon, Rng& rng);

/// r + gamma (1 - terminal) max_a q_next(a).
double q_target(double reward, double gamma, bool terminal, std::span<const double> q_next);

/// (q[action] - y)^2, gradient 2 (q[action] - y) at `action` only.
double q_loss(std::span<const double> q, std::size_t action, double y, std::span<double> grad);

struct ControlSettings {
  std::size_t tau = 12;
  std::size_t batch_size = 8;
  std::size_t update_every = 4;
  std::size_t warmup = 1000;
  std::size_t capacity = 10000;
  StateMode state_mode = StateMode::kRefresh;
  SequenceAnchor anchor = SequenceAnchor::kEnd;
  bool online = false;
  std::size_t target_sync = 1000;
  double epsilon = 0.1;
  double gamma = 0.99;
};

struct EpisodeRecord {
  std::size_t episode = 0;  // 1-based
  std::size_t steps = 0;
  double total_reward = 0.0;
  bool success = false;
  bool timed_out = false;
};

struct ControlStep {
  std::size_t action = 0;
  bool updated = false;
  double loss = 0.0;
  std::optional<EpisodeRecord> episode;  // set when this step ended one
};

class QAgent {
 public:
  QAgent(CellParams params, OptimizerConfig optimizer, ControlSettings settings);

  /// One environment step. `forced` bypasses action selection (the
  /// exploration draw is still consumed so schedules stay aligned).
  ControlStep step(Environment& env, Rng& env_rng, Rng& act_rng, Rng& replay_rng,
                   std::optional<std::size_t> forced = std::nullopt);

  double update(Rng& replay_rng);

  bool at_episode_start() const { return !in_episode_; }
  /// Steps already taken in the current episode.
  std::size_t episode_step() const { return episode_steps_; }
  std::size_t episodes() const { return episodes_; }
  std::size_t total_steps() const { return steps_; }

  const RecurrentLearner& learner() const { return learner_; }
  RecurrentLearner& learner() { return learner_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ControlSettings& settings() const { return settings_; }
  std::span<const double> hidden() const { return h_; }
  std::span<const double> q_values() const { return q_; }
  std::size_t prev_action() const { return prev_action_; }

 private:
  RecurrentLearner learner_;
  ControlSettings settings_;
  ReplayBuffer buffer_;
  OnlineHistory history_;
  bool in_episode_ = false;
  std::vector<double> obs_;
  std::vector<double> h_;
  std::vector<double> q_;
  std::size_t prev_action_ = 0;
  std::size_t steps_ = 0;
  std::size_t episodes_ = 0;
  std::size_t episode_steps_ = 0;
  double episode_reward_ = 0.0;
};

/// A block of training steps during which every episode opens with the
/// given forced actions (and, for the directional maze, start heading).
struct InterventionPhase {
  std::size_t steps = 0;
  std::vector<std::size_t> forced_actions;
  std::optional<std::size_t> start_heading;
};

struct InterventionScript {
  std::vector<InterventionPhase> phases;

  /// Throws std::invalid_argument for actions or headings the environment
  /// does not have.
  void validate(const Environment& env) const;
  std::size_t total_steps() const;
  /// The two-forward-steps script: start facing east, step forward twice.
  static InterventionScript naive(std::size_t steps);
  /// Forced-forward count rising 0, 1, 2 over three equal phases. Not the
  /// published schedule, which was never printed.
  static InterventionScript curriculum(std::size_t steps);
};

using EpisodeCallback = std::function<void(std::size_t phase, const EpisodeRecord&)>;

/// Runs the script phase by phase with learning enabled.
void run_intervention(QAgent& agent, Environment& env, const InterventionScript& script,
                      Rng& env_rng, Rng& act_rng, Rng& replay_rng, const EpisodeCallback& on_episode);

}  // namespace actrnn

#endif  // ACTRNN_CONTROL_HPP
