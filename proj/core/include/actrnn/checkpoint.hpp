// SPDX-License-Identifier: Apache-2.0
//
// Parameter checkpoints: a JSON document holding the resolved experiment
// config, the step it was taken at, and every learnable array by name with
// its shape. Doubles are printed in shortest round-trip form, so loading a
// checkpoint restores the parameters bit for bit. Layout in docs/formats.md.

#ifndef ACTRNN_CHECKPOINT_HPP
#define ACTRNN_CHECKPOINT_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "actrnn/cells.hpp"
#include "actrnn/config.hpp"

namespace actrnn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ExperimentConfig config;
  std::size_t step = 0;
  CellParams params;
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
/// Throws std::runtime_error on malformed documents, version or layout
/// mismatches.
Checkpoint checkpoint_from_string(std::string_view text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace actrnn

#endif  // ACTRNN_CHECKPOINT_HPP
