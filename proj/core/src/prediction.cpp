// SPDX-License-Identifier: Apache-2.0

#include "actrnn/prediction.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace actrnn {

Horde Horde::ring_world() {
  Horde h;
  for (std::size_t dir : {std::size_t{kClockwise}, std::size_t{kCounterClockwise}})
    for (int g = 0; g < 10; ++g) h.gvfs.push_back({g / 10.0, dir, 0});
  return h;
}

TDTargets td0_targets(const Horde& horde, std::span<const double> v_next, const Transition& t,
                      double behavior_prob) {
  if (v_next.size() != horde.size())
    throw DimensionError(fmt::format("td0_targets: {} bootstrap values for {} GVFs",
                                     v_next.size(), horde.size()));
  if (!(behavior_prob > 0.0))
    throw std::invalid_argument("td0_targets: behavior probability of the taken action is zero");
  TDTargets out;
  out.y.resize(horde.size());
  out.rho.resize(horde.size());
  for (std::size_t i = 0; i < horde.size(); ++i) {
    const GVFSpec& g = horde.gvfs[i];
    if (g.cumulant_index >= t.next_obs.size())
      throw DimensionError("td0_targets: cumulant index outside the observation");
    const double c = t.next_obs[g.cumulant_index];
    const double cont = c == 1.0 ? 0.0 : g.gamma;
    out.y[i] = c + cont * v_next[i];
    out.rho[i] = (t.action == g.target_action ? 1.0 : 0.0) / behavior_prob;
  }
  return out;
}

double weighted_squared_error(std::span<const double> v, const TDTargets& targets,
                              std::span<double> grad) {
  if (v.size() != targets.y.size() || grad.size() != v.size())
    throw DimensionError("weighted_squared_error: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = v[i] - targets.y[i];
    loss += targets.rho[i] * e * e;
    grad[i] = 2.0 * targets.rho[i] * e;
  }
  return loss;
}

double rmsve(std::span<const double> predictions, std::span<const double> oracle, RmsveKind kind) {
  if (predictions.size() != oracle.size() || predictions.empty())
    throw DimensionError(fmt::format("rmsve: {} predictions vs {} oracle values",
                                     predictions.size(), oracle.size()));
  double ss = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - oracle[i];
    ss += e * e;
  }
  const double n = static_cast<double>(predictions.size());
  return kind == RmsveKind::kNormOverCount ? std::sqrt(ss) / n : std::sqrt(ss / n);
}

std::vector<double> horde_oracle(const Horde& horde, std::size_t ring_size, std::size_t position) {
  std::vector<double> out;
  out.reserve(horde.size());
  for (const auto& g : horde.gvfs)
    out.push_back(ring_oracle_value(ring_size, g.gamma, g.target_action, position));
  return out;
}

PredictionAgent::PredictionAgent(CellParams params, OptimizerConfig optimizer,
                                 PredictionSettings settings, Horde horde)
    : learner_(std::move(params), optimizer, settings.tau, settings.target_sync),
      settings_(settings),
      horde_(std::move(horde)),
      buffer_(settings.capacity, settings.state_mode),
      history_(settings.tau) {
  if (learner_.params().spec.outputs != horde_.size())
    throw std::invalid_argument(fmt::format("prediction head has {} outputs for {} GVFs",
                                            learner_.params().spec.outputs, horde_.size()));
  if (settings_.update_every == 0 || settings_.batch_size == 0)
    throw std::invalid_argument("update_every and batch_size must be positive");
}

double PredictionAgent::update(Rng& replay_rng) {
  const double b = 0.5;  // equiprobable two-action behavior
  LossFn loss = [&](std::span<const double> v, std::span<const double> v_next,
                    const Transition& last, std::span<double> grad) {
    return weighted_squared_error(v, td0_targets(horde_, v_next, last, b), grad);
  };
  std::vector<SequenceItem> items;
  std::vector<SampledSequence> seqs;
  if (settings_.online) {
    auto window = online_window(history_, settings_.tau);
    items.push_back(make_item(window, learner_.params().s0()));
  } else {
    seqs = buffer_.sample_sequences(settings_.batch_size, settings_.tau, learner_.params().s0(),
                                    replay_rng, settings_.anchor);
    for (const auto& s : seqs) items.push_back(make_item(buffer_, s));
  }
  UpdateResult r = learner_.update(items, loss);
  for (std::size_t i = 0; i < seqs.size(); ++i)
    buffer_.refresh_states(seqs[i], r.grad_h_init[i], learner_.optimizer().lr);
  return r.loss;
}

PredictionStep PredictionAgent::step(RingWorld& env, Rng& env_rng, Rng& behavior_rng,
                                     Rng& replay_rng) {
  Transition t;
  t.episode_start = !started_;
  if (!started_) {
    obs_ = env.reset(env_rng);
    auto s0 = learner_.params().s0();
    h_.assign(s0.begin(), s0.end());
    prev_action_ = 0;
    started_ = true;
  }
  t.h_stored = h_;
  t.prev_action = prev_action_;
  t.obs = obs_;

  h_ = learner_.step(h_, obs_, prev_action_);
  v_ = learner_.head(h_);
  PredictionStep out;
  out.rmsve = rmsve(v_, horde_oracle(horde_, env.state().size, env.state().position),
                    settings_.rmsve_kind);

  t.action = uniform_index(behavior_rng, env.num_actions());
  EnvStep s = env.step(t.action);
  t.reward = s.reward;
  t.next_obs = s.obs;
  t.terminal = s.terminal;
  ++steps_;

  if (settings_.online)
    history_.push(t);
  else
    buffer_.append(t);

  const bool ready = settings_.online ? true : buffer_.size() >= settings_.warmup;
  if (ready && steps_ % settings_.update_every == 0) {
    out.loss = update(replay_rng);
    out.updated = true;
  }
  if (settings_.target_sync && steps_ % settings_.target_sync == 0) learner_.sync_target();

  obs_ = s.obs;
  prev_action_ = t.action;
  return out;
}

}  // namespace actrnn
