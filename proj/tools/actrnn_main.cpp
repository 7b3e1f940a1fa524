// SPDX-License-Identifier: Apache-2.0
//
// actrnn run | sweep | dump | intervene

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "actrnn/checkpoint.hpp"
#include "actrnn/config.hpp"
#include "actrnn/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw actrnn::ConfigError(fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-conditioned recurrent cells for partially observable RL"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, script_path;
  std::optional<std::uint64_t> seed;
  std::size_t runs = 1, jobs = 1, steps = 1000;

  auto* run = app.add_subcommand("run", "Train one configuration");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Overrides the config seed");
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Train every grid point for several seeds");
  sweep->add_option("--config", config_path, "Sweep file (JSON)")->required();
  sweep->add_option("--runs", runs, "Seeds per grid point")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* dump = app.add_subcommand("dump", "Write hidden states of a trained model");
  dump->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  dump->add_option("--steps", steps, "Steps to roll out");
  dump->add_option("--seed", seed, "Rollout seed (default: the checkpoint's)");
  dump->add_option("--out", out_dir, "CSV file (default: stdout)");

  auto* intervene = app.add_subcommand("intervene", "Continue training under forced actions");
  intervene->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  intervene->add_option("--script", script_path, "Intervention script (JSON)")->required();
  intervene->add_option("--seed", seed, "Seed (default: the checkpoint's)");
  intervene->add_option("--out", out_dir, "CSV file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      actrnn::ExperimentConfig config = actrnn::load_config(config_path);
      if (seed) config.seed = *seed;
      const actrnn::RunResult r = actrnn::run_experiment(config, out_dir);
      if (r.diverged)
        std::cerr << fmt::format("run diverged after {} steps: {}\n", r.steps_completed, r.message);
      else
        std::cout << fmt::format("{} {}\n", r.metric, r.final_value);
      return 0;
    }
    if (*sweep) {
      const std::size_t diverged = actrnn::run_sweep(read_file(config_path), runs, jobs, out_dir,
                                                     &std::cerr);
      if (diverged) std::cerr << fmt::format("{} run(s) diverged\n", diverged);
      return 0;
    }
    if (*dump) {
      const actrnn::Checkpoint ckpt = actrnn::load_checkpoint(checkpoint_path);
      const std::uint64_t s = seed.value_or(ckpt.config.seed);
      if (out_dir.empty()) {
        actrnn::dump_hidden_states(ckpt, steps, s, std::cout);
      } else {
        std::ofstream out(out_dir, std::ios::binary);
        if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", out_dir));
        actrnn::dump_hidden_states(ckpt, steps, s, out);
      }
      return 0;
    }
    if (*intervene) {
      const actrnn::Checkpoint ckpt = actrnn::load_checkpoint(checkpoint_path);
      const auto script = actrnn::parse_intervention_script(read_file(script_path));
      const std::uint64_t s = seed.value_or(ckpt.config.seed);
      actrnn::RunResult r;
      if (out_dir.empty()) {
        r = actrnn::run_intervention_from_checkpoint(ckpt, script, s, std::cout);
      } else {
        std::ofstream out(out_dir, std::ios::binary);
        if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", out_dir));
        r = actrnn::run_intervention_from_checkpoint(ckpt, script, s, out);
      }
      std::cerr << fmt::format("final-phase success {}{}\n", r.final_value,
                               r.diverged ? " (diverged)" : "");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
