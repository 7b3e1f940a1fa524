// SPDX-License-Identifier: Apache-2.0

#include "actrnn/control.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace actrnn {

std::size_t greedy_action(std::span<const double> q) {
  if (q.empty()) throw std::invalid_argument("greedy_action: no actions");
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

std::size_t select_action(std::span<const double> q, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return uniform_index(rng, q.size());
  return greedy_action(q);
}

double q_target(double reward, double gamma, bool terminal, std::span<const double> q_next) {
  if (terminal) return reward;
  return reward + gamma * *std::max_element(q_next.begin(), q_next.end());
}

double q_loss(std::span<const double> q, std::size_t action, double y, std::span<double> grad) {
  if (action >= q.size() || grad.size() != q.size())
    throw DimensionError("q_loss: action or gradient length mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const double e = q[action] - y;
  grad[action] = 2.0 * e;
  return e * e;
}

QAgent::QAgent(CellParams params, OptimizerConfig optimizer, ControlSettings settings)
    : learner_(std::move(params), optimizer, settings.tau, settings.target_sync),
      settings_(settings),
      buffer_(settings.capacity, settings.state_mode),
      history_(settings.tau) {
  if (settings_.update_every == 0 || settings_.batch_size == 0)
    throw std::invalid_argument("update_every and batch_size must be positive");
  if (settings_.epsilon < 0.0 || settings_.epsilon > 1.0)
    throw std::invalid_argument("epsilon must lie in [0, 1]");
}

double QAgent::update(Rng& replay_rng) {
  LossFn loss = [&](std::span<const double> q, std::span<const double> q_next,
                    const Transition& last, std::span<double> grad) {
    return q_loss(q, last.action, q_target(last.reward, settings_.gamma, last.terminal, q_next),
                  grad);
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

ControlStep QAgent::step(Environment& env, Rng& env_rng, Rng& act_rng, Rng& replay_rng,
                         std::optional<std::size_t> forced) {
  Transition t;
  t.episode_start = !in_episode_;
  if (!in_episode_) {
    obs_ = env.reset(env_rng);
    auto s0 = learner_.params().s0();
    h_.assign(s0.begin(), s0.end());
    prev_action_ = 0;
    in_episode_ = true;
    episode_steps_ = 0;
    episode_reward_ = 0.0;
  }
  t.h_stored = h_;
  t.prev_action = prev_action_;
  t.obs = obs_;

  h_ = learner_.step(h_, obs_, prev_action_);
  q_ = learner_.head(h_);
  const std::size_t chosen = select_action(q_, settings_.epsilon, act_rng);
  if (forced && *forced >= env.num_actions())
    throw std::invalid_argument(fmt::format("forced action {} invalid", *forced));
  t.action = forced ? *forced : chosen;

  EnvStep s = env.step(t.action);
  t.reward = s.reward;
  t.next_obs = s.obs;
  t.terminal = s.terminal;
  ++steps_;
  ++episode_steps_;
  episode_reward_ += s.reward;

  ControlStep out;
  out.action = t.action;
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

  const std::size_t limit = env.max_episode_steps();
  const bool timed_out = !s.terminal && limit != 0 && episode_steps_ >= limit;
  if (s.terminal || timed_out) {
    ++episodes_;
    out.episode = EpisodeRecord{episodes_, episode_steps_, episode_reward_,
                                s.terminal && env.succeeded(), timed_out};
    in_episode_ = false;
  }
  return out;
}

void InterventionScript::validate(const Environment& env) const {
  const bool directional = dynamic_cast<const DirTMaze*>(&env) != nullptr;
  for (std::size_t p = 0; p < phases.size(); ++p) {
    for (std::size_t a : phases[p].forced_actions)
      if (a >= env.num_actions())
        throw std::invalid_argument(
            fmt::format("intervention phase {}: forced action {} invalid", p, a));
    if (phases[p].start_heading) {
      if (!directional)
        throw std::invalid_argument(
            fmt::format("intervention phase {}: start heading needs the directional maze", p));
      if (*phases[p].start_heading > 3)
        throw std::invalid_argument(fmt::format("intervention phase {}: heading outside 0..3", p));
    }
  }
}

std::size_t InterventionScript::total_steps() const {
  std::size_t n = 0;
  for (const auto& p : phases) n += p.steps;
  return n;
}

InterventionScript InterventionScript::naive(std::size_t steps) {
  return {{InterventionPhase{steps, {kForward, kForward}, kFacingEast}}};
}

InterventionScript InterventionScript::curriculum(std::size_t steps) {
  InterventionScript s;
  const std::size_t per = steps / 3;
  s.phases.push_back({per, {}, kFacingEast});
  s.phases.push_back({per, {kForward}, kFacingEast});
  s.phases.push_back({steps - 2 * per, {kForward, kForward}, kFacingEast});
  return s;
}

void run_intervention(QAgent& agent, Environment& env, const InterventionScript& script,
                      Rng& env_rng, Rng& act_rng, Rng& replay_rng,
                      const EpisodeCallback& on_episode) {
  script.validate(env);
  auto* dir = dynamic_cast<DirTMaze*>(&env);
  for (std::size_t p = 0; p < script.phases.size(); ++p) {
    const InterventionPhase& phase = script.phases[p];
    if (dir) dir->set_start_heading(phase.start_heading);
    for (std::size_t i = 0; i < phase.steps; ++i) {
      std::optional<std::size_t> forced;
      // episode_step() counts steps already taken; a pending reset means 0.
      const std::size_t k = agent.at_episode_start() ? 0 : agent.episode_step();
      if (k < phase.forced_actions.size()) forced = phase.forced_actions[k];
      ControlStep s = agent.step(env, env_rng, act_rng, replay_rng, forced);
      if (s.episode && on_episode) on_episode(p, *s.episode);
    }
  }
  if (dir) dir->set_start_heading(std::nullopt);
}

}  // namespace actrnn
