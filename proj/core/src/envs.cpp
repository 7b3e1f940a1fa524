// SPDX-License-Identifier: Apache-2.0

#include "actrnn/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace actrnn {

namespace {

void check_action(std::size_t action, std::size_t n, const char* env) {
  if (action >= n)
    throw std::out_of_range(fmt::format("{}: action {} outside [0, {})", env, action, n));
}

std::size_t tmaze_default_timeout(std::size_t length) { return 2 * (length + 1) * 4; }

}  // namespace

// ---------------------------------------------------------------- Ring World

std::vector<double> ring_observation(const RingWorldState& s) {
  return {s.position == 1 ? 1.0 : 0.0};
}

std::pair<RingWorldState, EnvStep> ring_step(const RingWorldState& s, std::size_t action) {
  check_action(action, 2, "ring world");
  if (s.position < 1 || s.position > s.size)
    throw std::invalid_argument(fmt::format("ring world: position {} outside [1, {}]",
                                            s.position, s.size));
  RingWorldState next = s;
  if (action == kClockwise)
    next.position = s.position == s.size ? 1 : s.position + 1;
  else
    next.position = s.position == 1 ? s.size : s.position - 1;
  return {next, EnvStep{ring_observation(next), 0.0, false}};
}

std::size_t ring_distance(std::size_t size, std::size_t direction, std::size_t position) {
  if (position < 1 || position > size)
    throw std::invalid_argument(fmt::format("ring world: position {} outside [1, {}]",
                                            position, size));
  check_action(direction, 2, "ring world");
  // Clockwise increments positions, so the active state is reached after
  // (1 - p) mod N steps; counter-clockwise after (p - 1) mod N.
  std::size_t d = direction == kClockwise ? (size + 1 - position) % size : (position - 1) % size;
  return d == 0 ? size : d;
}

double ring_oracle_value(std::size_t size, double gamma, std::size_t direction,
                         std::size_t position) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument(fmt::format("ring oracle: gamma {} outside [0, 1)", gamma));
  // Repeated multiplication rather than pow, so v(s) == gamma * v(s') holds
  // bit for bit along the persistent policy.
  const std::size_t d = ring_distance(size, direction, position);
  double v = 1.0;
  for (std::size_t k = 1; k < d; ++k) v *= gamma;
  return v;
}

// --------------------------------------------------------------------- TMaze

std::vector<double> tmaze_observation(const TMazeState& s) {
  if (s.position == 0) return s.goal_north ? std::vector{1.0, 1.0, 0.0} : std::vector{0.0, 1.0, 1.0};
  if (s.position == s.length) return {0.0, 1.0, 0.0};
  return {1.0, 0.0, 1.0};
}

std::pair<TMazeState, EnvStep> tmaze_step(const TMazeState& s, std::size_t action) {
  if (s.terminal) throw std::logic_error("tmaze: step on a terminal state");
  check_action(action, 4, "tmaze");
  TMazeState next = s;
  EnvStep out;
  out.reward = kStepReward;
  switch (action) {
    case kEast:
      next.position = std::min(s.position + 1, s.length);
      break;
    case kWest:
      next.position = s.position == 0 ? 0 : s.position - 1;
      break;
    case kNorth:
    case kSouth:
      if (s.position == s.length) {
        const bool correct = (action == kNorth) == s.goal_north;
        out.reward = correct ? kGoalReward : kWrongGoalReward;
        out.terminal = true;
        next.terminal = true;
      }
      break;
  }
  out.obs = tmaze_observation(next);
  return {next, out};
}

// ------------------------------------------------------- Directional TMaze

std::vector<double> dirtmaze_observation(const DirTMazeState& s) {
  const std::vector<double> open{0.0, 0.0, 1.0}, wall{0.0, 1.0, 0.0}, cue{1.0, 1.0, 0.0};
  const std::size_t h = s.heading;
  if (s.position == 0) {
    if (h == kFacingEast) return open;
    const bool goal_wall = (h == kFacingNorth && s.goal_north) || (h == kFacingSouth && !s.goal_north);
    return goal_wall ? cue : wall;
  }
  if (s.position == s.length) return h == kFacingEast ? wall : open;
  return (h == kFacingEast || h == kFacingWest) ? open : wall;
}

std::pair<DirTMazeState, EnvStep> dirtmaze_step(const DirTMazeState& s, std::size_t action) {
  if (s.terminal) throw std::logic_error("directional tmaze: step on a terminal state");
  check_action(action, 3, "directional tmaze");
  if (s.heading > 3) throw std::invalid_argument("directional tmaze: heading outside [0, 3]");
  DirTMazeState next = s;
  EnvStep out;
  out.reward = kStepReward;
  switch (action) {
    case kTurnCw:
      next.heading = (s.heading + 1) % 4;
      break;
    case kTurnCcw:
      next.heading = (s.heading + 3) % 4;
      break;
    case kForward:
      if (s.heading == kFacingEast && s.position < s.length) {
        next.position = s.position + 1;
      } else if (s.heading == kFacingWest && s.position > 0) {
        next.position = s.position - 1;
      } else if (s.position == s.length &&
                 (s.heading == kFacingNorth || s.heading == kFacingSouth)) {
        const bool correct = (s.heading == kFacingNorth) == s.goal_north;
        out.reward = correct ? kGoalReward : kWrongGoalReward;
        out.terminal = true;
        next.terminal = true;
      }
      break;
  }
  out.obs = dirtmaze_observation(next);
  return {next, out};
}

// ---------------------------------------------------------- Masked Grid World

std::vector<double> maskedgw_observation(const MaskedGWState& s) {
  for (const auto& [x, y] : s.aliased)
    if (x == s.x && y == s.y) return {1.0};
  return {0.0};
}

std::pair<MaskedGWState, EnvStep> maskedgw_step(const MaskedGWState& s, std::size_t action) {
  if (s.terminal) throw std::logic_error("masked grid world: step on a terminal state");
  check_action(action, 4, "masked grid world");
  MaskedGWState next = s;
  switch (action) {
    case kNorth: next.y = s.y == 1 ? s.height : s.y - 1; break;
    case kSouth: next.y = s.y == s.height ? 1 : s.y + 1; break;
    case kEast: next.x = s.x == s.width ? 1 : s.x + 1; break;
    case kWest: next.x = s.x == 1 ? s.width : s.x - 1; break;
  }
  EnvStep out;
  if (next.x == s.goal_x && next.y == s.goal_y) {
    out.reward = 1.0;
    out.terminal = true;
    next.terminal = true;
  }
  out.obs = maskedgw_observation(next);
  return {next, out};
}

// -------------------------------------------------------------- Environments

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kRingWorld: return "ring_world";
    case EnvKind::kTMaze: return "tmaze";
    case EnvKind::kDirTMaze: return "dir_tmaze";
    case EnvKind::kMaskedGridWorld: return "masked_grid_world";
  }
  return "?";
}

EnvKind parse_env_kind(std::string_view name) {
  for (EnvKind k : {EnvKind::kRingWorld, EnvKind::kTMaze, EnvKind::kDirTMaze,
                    EnvKind::kMaskedGridWorld})
    if (to_string(k) == name) return k;
  throw std::invalid_argument(fmt::format("unknown environment '{}'", name));
}

std::unique_ptr<Environment> make_environment(const EnvConfig& c, Rng& rng) {
  if (c.size == 0) throw std::invalid_argument("environment size must be positive");
  switch (c.kind) {
    case EnvKind::kRingWorld:
      return std::make_unique<RingWorld>(c.size);
    case EnvKind::kTMaze:
      return std::make_unique<TMaze>(
          c.size, c.max_episode_steps ? c.max_episode_steps : tmaze_default_timeout(c.size));
    case EnvKind::kDirTMaze:
      return std::make_unique<DirTMaze>(
          c.size, c.max_episode_steps ? c.max_episode_steps : tmaze_default_timeout(c.size));
    case EnvKind::kMaskedGridWorld:
      return std::make_unique<MaskedGridWorld>(c.size, c.height, c.aliased,
                                               c.max_episode_steps ? c.max_episode_steps : 500,
                                               rng);
  }
  throw std::logic_error("unknown environment kind");
}

RingWorld::RingWorld(std::size_t size) {
  if (size < 2) throw std::invalid_argument("ring world needs at least 2 states");
  state_.size = size;
}

std::vector<double> RingWorld::reset(Rng& rng) {
  state_.position = 1 + uniform_index(rng, state_.size);
  return ring_observation(state_);
}

EnvStep RingWorld::step(std::size_t action) {
  auto [next, out] = ring_step(state_, action);
  state_ = next;
  return out;
}

TMaze::TMaze(std::size_t length, std::size_t max_steps) : max_steps_(max_steps) {
  if (length < 1) throw std::invalid_argument("tmaze hallway length must be positive");
  state_.length = length;
}

std::vector<double> TMaze::reset(Rng& rng) {
  state_.position = 0;
  state_.terminal = false;
  state_.goal_north = uniform01(rng) < 0.5;
  success_ = false;
  return tmaze_observation(state_);
}

EnvStep TMaze::step(std::size_t action) {
  auto [next, out] = tmaze_step(state_, action);
  state_ = next;
  success_ = out.terminal && out.reward == kGoalReward;
  return out;
}

long TMaze::state_label() const {
  return static_cast<long>(state_.position + (state_.goal_north ? 0 : state_.length + 1));
}

DirTMaze::DirTMaze(std::size_t length, std::size_t max_steps) : max_steps_(max_steps) {
  if (length < 1) throw std::invalid_argument("directional tmaze length must be positive");
  state_.length = length;
}

std::vector<double> DirTMaze::reset(Rng& rng) {
  state_.position = 0;
  state_.terminal = false;
  state_.goal_north = uniform01(rng) < 0.5;
  state_.heading = start_heading_ ? *start_heading_ % 4 : uniform_index(rng, 4);
  success_ = false;
  return dirtmaze_observation(state_);
}

EnvStep DirTMaze::step(std::size_t action) {
  auto [next, out] = dirtmaze_step(state_, action);
  state_ = next;
  success_ = out.terminal && out.reward == kGoalReward;
  return out;
}

long DirTMaze::state_label() const {
  return static_cast<long>((state_.position * 4 + state_.heading) * 2 + (state_.goal_north ? 0 : 1));
}

MaskedGridWorld::MaskedGridWorld(std::size_t width, std::size_t height, std::size_t aliased,
                                 std::size_t max_steps, Rng& rng)
    : max_steps_(max_steps) {
  if (width == 0 || height == 0) throw std::invalid_argument("grid dimensions must be positive");
  const std::size_t cells = width * height;
  if (aliased + 1 > cells)
    throw std::invalid_argument("masked grid world: too many aliased cells for the grid");
  state_.width = width;
  state_.height = height;
  // Goal first, then a partial Fisher-Yates draw of the aliased cells among
  // the rest, so the layout depends only on the seed.
  std::vector<std::size_t> idx(cells);
  for (std::size_t i = 0; i < cells; ++i) idx[i] = i;
  for (std::size_t i = 0; i < aliased + 1; ++i) {
    const std::size_t j = i + uniform_index(rng, cells - i);
    std::swap(idx[i], idx[j]);
  }
  state_.goal_x = idx[0] % width + 1;
  state_.goal_y = idx[0] / width + 1;
  for (std::size_t i = 1; i <= aliased; ++i)
    state_.aliased.emplace_back(idx[i] % width + 1, idx[i] / width + 1);
}

std::vector<double> MaskedGridWorld::reset(Rng& rng) {
  const std::size_t cells = state_.width * state_.height;
  const std::size_t goal = (state_.goal_y - 1) * state_.width + (state_.goal_x - 1);
  std::size_t c = uniform_index(rng, cells - 1);
  if (c >= goal) ++c;
  state_.x = c % state_.width + 1;
  state_.y = c / state_.width + 1;
  state_.terminal = false;
  success_ = false;
  return maskedgw_observation(state_);
}

EnvStep MaskedGridWorld::step(std::size_t action) {
  auto [next, out] = maskedgw_step(state_, action);
  state_ = next;
  success_ = out.terminal;
  return out;
}

long MaskedGridWorld::state_label() const {
  return static_cast<long>((state_.y - 1) * state_.width + (state_.x - 1));
}

}  // namespace actrnn
