// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind the command-line tool: single runs, sweeps,
// hidden-state dumps and intervention runs. Output files are documented in
// docs/formats.md.

#ifndef ACTRNN_HARNESS_HPP
#define ACTRNN_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

#include "actrnn/checkpoint.hpp"
#include "actrnn/config.hpp"
#include "actrnn/control.hpp"
#include "actrnn/params.hpp"

namespace actrnn {

/// Version of the metric CSV layouts, recorded in every summary.json.
inline constexpr int kMetricsSchemaVersion = 1;

/// Independent generator streams of a run, all derived from one seed.
struct RunRngs {
  Rng init;
  Rng env;
  Rng act;
  Rng replay;

  explicit RunRngs(std::uint64_t seed);
};

struct RunResult {
  bool diverged = false;
  std::string message;
  std::size_t steps_completed = 0;
  /// "final_rmsve" (prediction) or "final_success" (control).
  std::string metric;
  /// NaN when diverged before producing any value.
  double final_value = 0.0;
  std::size_t episodes = 0;
  /// Mean CombSoftmax weights at the end of training (NaN for other cells).
  double softmax_additive = 0.0;
  double softmax_multiplicative = 0.0;
};

/// Trains per `config` and writes config.json, the metric CSVs,
/// checkpoint.json, status.json and summary.json into `out_dir`.
/// Divergence is reported in the result and status file, not thrown.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Runs every grid point for seeds base.seed .. base.seed + runs - 1 on
/// `jobs` threads, then writes runs.csv and summary.csv into `out_dir`.
/// Returns the number of diverged runs.
std::size_t run_sweep(std::string_view sweep_json, std::size_t runs, std::size_t jobs,
                      const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

/// Mean over elements of the CombSoftmax weights (additive, multiplicative).
std::pair<double, double> track_softmax_weights(const CellParams& params);

/// Rolls the checkpointed model forward for `steps` without learning (the
/// behavior policy for prediction, epsilon-greedy for control) and writes
/// step,state,prev_action,h0..h{n-1} rows.
void dump_hidden_states(const Checkpoint& ckpt, std::size_t steps, std::uint64_t seed,
                        std::ostream& out);

/// {"phases": [{"steps": n, "forced_actions": [..], "start_heading": "east"}]}
InterventionScript parse_intervention_script(std::string_view json_text);

/// Continues training the checkpointed agent under `script`; writes
/// phase,episode,total_steps,total_reward,success rows.
RunResult run_intervention_from_checkpoint(const Checkpoint& ckpt,
                                           const InterventionScript& script,
                                           std::uint64_t seed, std::ostream& out);

}  // namespace actrnn

#endif  // ACTRNN_HARNESS_HPP
