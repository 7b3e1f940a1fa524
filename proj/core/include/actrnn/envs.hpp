// SPDX-License-Identifier: Apache-2.0
//
// Partially observable test domains. Each has a pure step function over an
// explicit state struct; the Environment wrappers add episode bookkeeping
// (seeded resets, timeouts) for the training loops.

#ifndef ACTRNN_ENVS_HPP
#define ACTRNN_ENVS_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actrnn/params.hpp"

namespace actrnn {

struct EnvStep {
  std::vector<double> obs;
  double reward = 0.0;
  bool terminal = false;
};

// ---------------------------------------------------------------- Ring World

enum RingAction : std::size_t { kClockwise = 0, kCounterClockwise = 1 };

struct RingWorldState {
  std::size_t size = 10;     // N
  std::size_t position = 1;  // 1..N; the active bit is at 1
};

std::vector<double> ring_observation(const RingWorldState& s);
std::pair<RingWorldState, EnvStep> ring_step(const RingWorldState& s, std::size_t action);

/// Steps needed to reach the active state moving persistently in `direction`;
/// N when already there.
std::size_t ring_distance(std::size_t size, std::size_t direction, std::size_t position);

/// gamma^(d-1): value of the state-terminating GVF whose cumulant is the
/// active bit.
double ring_oracle_value(std::size_t size, double gamma, std::size_t direction,
                         std::size_t position);

// --------------------------------------------------------------------- TMaze

enum TMazeAction : std::size_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

inline constexpr double kStepReward = -0.1;
inline constexpr double kGoalReward = 4.0;
inline constexpr double kWrongGoalReward = -1.0;

struct TMazeState {
  std::size_t length = 10;  // L; the junction is at position L
  std::size_t position = 0;
  bool goal_north = true;
  bool terminal = false;
};

std::vector<double> tmaze_observation(const TMazeState& s);
std::pair<TMazeState, EnvStep> tmaze_step(const TMazeState& s, std::size_t action);

// ------------------------------------------------------- Directional TMaze

enum DirAction : std::size_t { kForward = 0, kTurnCw = 1, kTurnCcw = 2 };
enum Heading : std::size_t { kFacingNorth = 0, kFacingEast = 1, kFacingSouth = 2, kFacingWest = 3 };

struct DirTMazeState {
  std::size_t length = 10;
  std::size_t position = 0;
  std::size_t heading = kFacingEast;
  bool goal_north = true;
  bool terminal = false;
};

std::vector<double> dirtmaze_observation(const DirTMazeState& s);
std::pair<DirTMazeState, EnvStep> dirtmaze_step(const DirTMazeState& s, std::size_t action);

// ---------------------------------------------------------- Masked Grid World

struct MaskedGWState {
  std::size_t width = 10;
  std::size_t height = 10;
  std::size_t x = 1;  // 1-based
  std::size_t y = 1;
  std::size_t goal_x = 1;
  std::size_t goal_y = 1;
  std::vector<std::pair<std::size_t, std::size_t>> aliased;
  bool terminal = false;
};

std::vector<double> maskedgw_observation(const MaskedGWState& s);
/// N decreases y, S increases y; both axes wrap.
std::pair<MaskedGWState, EnvStep> maskedgw_step(const MaskedGWState& s, std::size_t action);

// -------------------------------------------------------------- Environments

enum class EnvKind { kRingWorld, kTMaze, kDirTMaze, kMaskedGridWorld };

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view name);

struct EnvConfig {
  EnvKind kind = EnvKind::kRingWorld;
  std::size_t size = 10;  // ring N, hallway L, grid width
  std::size_t height = 10;
  std::size_t aliased = 10;
  /// 0 picks the domain default (TMazes: 2(L+1)*4; grid: 500; ring: none).
  std::size_t max_episode_steps = 0;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual bool episodic() const = 0;
  /// Steps after which an episode is cut off as a failure (0: never).
  virtual std::size_t max_episode_steps() const = 0;

  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual EnvStep step(std::size_t action) = 0;

  /// Integer label of the underlying state (for hidden-state dumps).
  virtual long state_label() const = 0;
  /// Whether the last terminal step reached the correct goal.
  virtual bool succeeded() const = 0;
};

/// Constructed environments draw per-run randomness (Masked Grid World's goal
/// and aliased cells) from `rng` at construction.
std::unique_ptr<Environment> make_environment(const EnvConfig& config, Rng& rng);

class RingWorld final : public Environment {
 public:
  explicit RingWorld(std::size_t size);
  std::size_t obs_dim() const override { return 1; }
  std::size_t num_actions() const override { return 2; }
  bool episodic() const override { return false; }
  std::size_t max_episode_steps() const override { return 0; }
  std::vector<double> reset(Rng& rng) override;
  EnvStep step(std::size_t action) override;
  long state_label() const override { return static_cast<long>(state_.position); }
  bool succeeded() const override { return false; }
  const RingWorldState& state() const { return state_; }

 private:
  RingWorldState state_;
};

class TMaze final : public Environment {
 public:
  TMaze(std::size_t length, std::size_t max_steps);
  std::size_t obs_dim() const override { return 3; }
  std::size_t num_actions() const override { return 4; }
  bool episodic() const override { return true; }
  std::size_t max_episode_steps() const override { return max_steps_; }
  std::vector<double> reset(Rng& rng) override;
  EnvStep step(std::size_t action) override;
  long state_label() const override;
  bool succeeded() const override { return success_; }
  const TMazeState& state() const { return state_; }

 private:
  TMazeState state_;
  std::size_t max_steps_;
  bool success_ = false;
};

class DirTMaze final : public Environment {
 public:
  DirTMaze(std::size_t length, std::size_t max_steps);
  std::size_t obs_dim() const override { return 3; }
  std::size_t num_actions() const override { return 3; }
  bool episodic() const override { return true; }
  std::size_t max_episode_steps() const override { return max_steps_; }
  std::vector<double> reset(Rng& rng) override;
  EnvStep step(std::size_t action) override;
  long state_label() const override;
  bool succeeded() const override { return success_; }
  const DirTMazeState& state() const { return state_; }

  /// Pins the heading used by subsequent resets (nullopt: uniform random).
  void set_start_heading(std::optional<std::size_t> heading) { start_heading_ = heading; }

 private:
  DirTMazeState state_;
  std::size_t max_steps_;
  bool success_ = false;
  std::optional<std::size_t> start_heading_;
};

class MaskedGridWorld final : public Environment {
 public:
  MaskedGridWorld(std::size_t width, std::size_t height, std::size_t aliased,
                  std::size_t max_steps, Rng& rng);
  std::size_t obs_dim() const override { return 1; }
  std::size_t num_actions() const override { return 4; }
  bool episodic() const override { return true; }
  std::size_t max_episode_steps() const override { return max_steps_; }
  std::vector<double> reset(Rng& rng) override;
  EnvStep step(std::size_t action) override;
  long state_label() const override;
  bool succeeded() const override { return success_; }
  const MaskedGWState& state() const { return state_; }

 private:
  MaskedGWState state_;
  std::size_t max_steps_;
  bool success_ = false;
};

}  // namespace actrnn

#endif  // ACTRNN_ENVS_HPP
