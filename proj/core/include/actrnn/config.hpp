// SPDX-License-Identifier: Apache-2.0
//
// Declarative experiment description. Files are JSON objects; every key is
// optional except env.name, cell.kind, cell.hidden and optimizer.lr, and any
// key not listed in docs/config.md is an error. Domain defaults follow the
// published protocol tables (see README).

#ifndef ACTRNN_CONFIG_HPP
#define ACTRNN_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "actrnn/cells.hpp"
#include "actrnn/envs.hpp"
#include "actrnn/optim.hpp"
#include "actrnn/prediction.hpp"
#include "actrnn/replay.hpp"

namespace actrnn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { kPrediction, kControl };

struct TrainingSettings {
  std::size_t tau = 1;
  bool online = false;
  std::size_t batch_size = 4;
  std::size_t update_every = 4;
  std::size_t target_sync = 1000;
  StateMode state_mode = StateMode::kRefresh;
  SequenceAnchor anchor = SequenceAnchor::kEnd;
  std::size_t buffer_capacity = 1000;
  std::size_t warmup = 1000;
};

struct ControlParams {
  double epsilon = 0.1;
  double gamma = 0.99;
};

struct MetricsSettings {
  std::size_t log_interval = 1;        // rows of the per-step series
  std::size_t window = 1000;           // windowed_rmsve width
  std::size_t final_window = 50000;    // steps averaged for the final RMSVE
  double final_fraction = 0.1;         // episodes averaged for final success
  RmsveKind rmsve = RmsveKind::kNormOverCount;
  std::size_t loss_interval = 1000;
  std::size_t softmax_interval = 1000;
  std::size_t checkpoint_every = 0;    // 0: final checkpoint only
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t steps = 300000;
  EnvConfig env;
  /// obs_dim, num_actions and outputs are filled in from the environment.
  CellSpec cell;
  OptimizerConfig optimizer;
  TrainingSettings training;
  ControlParams control;
  MetricsSettings metrics;

  ExperimentKind experiment() const {
    return env.kind == EnvKind::kRingWorld ? ExperimentKind::kPrediction
                                           : ExperimentKind::kControl;
  }
};

/// Parses and validates a config document. Throws ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved config, every key present. parse_config(to_json_string(c))
/// reproduces c.
std::string to_json_string(const ExperimentConfig& config, int indent = 2);

/// Throws ConfigError on values the training loops cannot run with.
void validate(const ExperimentConfig& config);

}  // namespace actrnn

#endif  // ACTRNN_CONFIG_HPP
