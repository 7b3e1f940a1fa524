// SPDX-License-Identifier: Apache-2.0

#include "actrnn/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "actrnn/grid.hpp"
#include "actrnn/metrics.hpp"
#include "actrnn/prediction.hpp"
#include "config_json.hpp"

namespace actrnn {

using detail::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Rng derived(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return Rng(seq);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
  return out;
}

// JSON has no NaN; missing values are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(double v) { return std::isfinite(v) ? fmt::format("{}", v) : "nan"; }

bool is_comb_softmax(const CellSpec& s) {
  return s.kind == CellKind::kCombSoftmaxRNN || s.kind == CellKind::kCombSoftmaxGRU;
}

PredictionSettings prediction_settings(const ExperimentConfig& c) {
  PredictionSettings s;
  s.tau = c.training.tau;
  s.batch_size = c.training.batch_size;
  s.update_every = c.training.update_every;
  s.warmup = c.training.warmup;
  s.capacity = c.training.buffer_capacity;
  s.state_mode = c.training.state_mode;
  s.anchor = c.training.anchor;
  s.online = c.training.online;
  s.target_sync = c.training.target_sync;
  s.rmsve_kind = c.metrics.rmsve;
  return s;
}

ControlSettings control_settings(const ExperimentConfig& c) {
  ControlSettings s;
  s.tau = c.training.tau;
  s.batch_size = c.training.batch_size;
  s.update_every = c.training.update_every;
  s.warmup = c.training.warmup;
  s.capacity = c.training.buffer_capacity;
  s.state_mode = c.training.state_mode;
  s.anchor = c.training.anchor;
  s.online = c.training.online;
  s.target_sync = c.training.target_sync;
  s.epsilon = c.control.epsilon;
  s.gamma = c.control.gamma;
  return s;
}

// Per-run output files shared by both experiment kinds.
class RunWriter {
 public:
  RunWriter(const ExperimentConfig& c, const std::filesystem::path& dir) : config_(c), dir_(dir) {
    std::filesystem::create_directories(dir);
    auto cfg = open_out(dir / "config.json");
    cfg << to_json_string(c) << '\n';
    loss_ = open_out(dir / "loss.csv");
    loss_ << "step,updates,mean_loss\n";
    if (is_comb_softmax(c.cell)) {
      softmax_ = open_out(dir / "softmax_weights.csv");
      softmax_ << "step,additive,multiplicative\n";
    }
    if (c.metrics.checkpoint_every) std::filesystem::create_directories(dir / "checkpoints");
  }

  void after_step(std::size_t step, bool updated, double loss, const CellParams& params) {
    if (updated) {
      ++updates_;
      loss_sum_ += loss;
    }
    if (step % config_.metrics.loss_interval == 0) {
      loss_ << step << ',' << updates_ << ','
            << csv_number(updates_ ? loss_sum_ / static_cast<double>(updates_) : kNaN) << '\n';
      updates_ = 0;
      loss_sum_ = 0.0;
    }
    if (softmax_.is_open() && step % config_.metrics.softmax_interval == 0) softmax(step, params);
    if (config_.metrics.checkpoint_every && step % config_.metrics.checkpoint_every == 0)
      save_checkpoint({config_, step, params},
                      dir_ / "checkpoints" / fmt::format("step_{}.json", step));
  }

  void softmax(std::size_t step, const CellParams& params) {
    auto [a, m] = track_softmax_weights(params);
    softmax_ << step << ',' << csv_number(a) << ',' << csv_number(m) << '\n';
  }

  void finish(const RunResult& r, const CellParams& params) {
    save_checkpoint({config_, r.steps_completed, params}, dir_ / "checkpoint.json");
    json status{{"status", r.diverged ? "diverged" : "ok"},
                {"steps_completed", r.steps_completed},
                {"message", r.message}};
    open_out(dir_ / "status.json") << status.dump(2) << '\n';
    json summary{{"schema_version", kMetricsSchemaVersion},
                 {"status", r.diverged ? "diverged" : "ok"},
                 {"steps_completed", r.steps_completed},
                 {"metric", r.metric},
                 {"final", number_or_null(r.final_value)},
                 {"episodes", r.episodes}};
    if (is_comb_softmax(config_.cell))
      summary["final_softmax"] = {{"additive", number_or_null(r.softmax_additive)},
                                  {"multiplicative", number_or_null(r.softmax_multiplicative)}};
    open_out(dir_ / "summary.json") << summary.dump(2) << '\n';
  }

 private:
  const ExperimentConfig& config_;
  std::filesystem::path dir_;
  std::ofstream loss_;
  std::ofstream softmax_;
  std::size_t updates_ = 0;
  double loss_sum_ = 0.0;
};

void finish_softmax(RunResult& r, const CellParams& params) {
  if (is_comb_softmax(params.spec)) {
    std::tie(r.softmax_additive, r.softmax_multiplicative) = track_softmax_weights(params);
  } else {
    r.softmax_additive = r.softmax_multiplicative = kNaN;
  }
}

RunResult run_prediction(const ExperimentConfig& c, const std::filesystem::path& dir) {
  RunRngs rng(c.seed);
  RingWorld env(c.env.size);
  PredictionAgent agent(init_params(c.cell, rng.init), c.optimizer, prediction_settings(c),
                        Horde::ring_world());
  RunWriter writer(c, dir);
  auto series = open_out(dir / "rmsve.csv");
  series << "step,rmsve,windowed_rmsve\n";
  if (is_comb_softmax(c.cell)) writer.softmax(0, agent.learner().params());

  RunResult r;
  r.metric = "final_rmsve";
  WindowMean window(c.metrics.window);
  WindowMean final_window(std::max<std::size_t>(1, c.metrics.final_window));
  for (std::size_t step = 1; step <= c.steps; ++step) {
    PredictionStep s;
    try {
      s = agent.step(env, rng.env, rng.act, rng.replay);
    } catch (const NonFiniteError& e) {
      r.diverged = true;
      r.message = e.what();
      break;
    } catch (const DivergedError& e) {
      r.diverged = true;
      r.message = e.what();
      break;
    }
    r.steps_completed = step;
    const double w = window.push(s.rmsve);
    final_window.push(s.rmsve);
    if (step % c.metrics.log_interval == 0)
      series << step << ',' << csv_number(s.rmsve) << ',' << csv_number(w) << '\n';
    writer.after_step(step, s.updated, s.loss, agent.learner().params());
  }
  r.final_value = r.diverged || final_window.count() == 0 ? kNaN : final_window.mean();
  finish_softmax(r, agent.learner().params());
  writer.finish(r, agent.learner().params());
  return r;
}

RunResult run_control(const ExperimentConfig& c, const std::filesystem::path& dir) {
  RunRngs rng(c.seed);
  auto env = make_environment(c.env, rng.env);
  QAgent agent(init_params(c.cell, rng.init), c.optimizer, control_settings(c));
  RunWriter writer(c, dir);
  auto episodes = open_out(dir / "episodes.csv");
  episodes << "episode,total_steps,total_reward,success\n";
  if (is_comb_softmax(c.cell)) writer.softmax(0, agent.learner().params());

  RunResult r;
  r.metric = "final_success";
  std::vector<double> successes;
  for (std::size_t step = 1; step <= c.steps; ++step) {
    ControlStep s;
    try {
      s = agent.step(*env, rng.env, rng.act, rng.replay);
    } catch (const NonFiniteError& e) {
      r.diverged = true;
      r.message = e.what();
      break;
    } catch (const DivergedError& e) {
      r.diverged = true;
      r.message = e.what();
      break;
    }
    r.steps_completed = step;
    if (s.episode) {
      const EpisodeRecord& e = *s.episode;
      episodes << e.episode << ',' << e.steps << ',' << csv_number(e.total_reward) << ','
               << (e.success ? 1 : 0) << '\n';
      successes.push_back(e.success ? 1.0 : 0.0);
    }
    writer.after_step(step, s.updated, s.loss, agent.learner().params());
  }
  r.episodes = successes.size();
  r.final_value = successes.empty() ? (r.diverged ? kNaN : 0.0)
                                    : tail_mean(successes, c.metrics.final_fraction);
  if (r.diverged) r.final_value = kNaN;
  finish_softmax(r, agent.learner().params());
  writer.finish(r, agent.learner().params());
  return r;
}

std::size_t parse_heading(const json& v) {
  if (v.is_number_integer()) return v.get<std::size_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "north") return kFacingNorth;
    if (s == "east") return kFacingEast;
    if (s == "south") return kFacingSouth;
    if (s == "west") return kFacingWest;
  }
  throw ConfigError(fmt::format("bad start_heading {}", v.dump()));
}

}  // namespace

RunRngs::RunRngs(std::uint64_t seed)
    : init(derived(seed, 0)), env(derived(seed, 1)), act(derived(seed, 2)),
      replay(derived(seed, 3)) {}

std::pair<double, double> track_softmax_weights(const CellParams& params) {
  auto [wa, wm] = softmax_weights(params);
  double a = 0.0, m = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    a += wa[i];
    m += wm[i];
  }
  const double n = static_cast<double>(wa.size());
  return {a / n, m / n};
}

RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  validate(config);
  return config.experiment() == ExperimentKind::kPrediction ? run_prediction(config, out_dir)
                                                            : run_control(config, out_dir);
}

std::size_t run_sweep(std::string_view sweep_json, std::size_t runs, std::size_t jobs,
                      const std::filesystem::path& out_dir, std::ostream* progress) {
  if (runs == 0) throw ConfigError("--runs must be positive");
  const auto points = expand_sweep(sweep_json);
  const auto axes = sweep_axes(sweep_json);
  std::filesystem::create_directories(out_dir);
  open_out(out_dir / "sweep.json") << sweep_json << '\n';

  struct Task {
    std::size_t point;
    ExperimentConfig config;
    std::filesystem::path dir;
  };
  std::vector<Task> tasks;
  for (const auto& p : points) {
    for (std::size_t r = 0; r < runs; ++r) {
      ExperimentConfig c = p.config;
      c.seed = p.config.seed + r;
      tasks.push_back({p.index, c,
                       out_dir / fmt::format("point_{}", p.index) / fmt::format("seed_{}", c.seed)});
    }
  }
  std::vector<RunResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        results[i] = run_experiment(tasks[i].config, tasks[i].dir);
      } catch (const std::exception& e) {
        // A failure outside training (I/O, bad config) is recorded like a
        // diverged run so the sweep completes.
        results[i].diverged = true;
        results[i].message = e.what();
        results[i].final_value = kNaN;
      }
      if (progress) {
        std::lock_guard lock(log_mutex);
        *progress << fmt::format("[{}/{}] point {} seed {}: {} {}\n", i + 1, tasks.size(),
                                 tasks[i].point, tasks[i].config.seed,
                                 results[i].diverged ? "diverged" : "ok",
                                 csv_number(results[i].final_value));
        progress->flush();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < std::max<std::size_t>(1, jobs); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  auto runs_csv = open_out(out_dir / "runs.csv");
  runs_csv << "point,seed,status,metric,final\n";
  for (std::size_t i = 0; i < tasks.size(); ++i)
    runs_csv << tasks[i].point << ',' << tasks[i].config.seed << ','
             << (results[i].diverged ? "diverged" : "ok") << ',' << results[i].metric << ','
             << csv_number(results[i].final_value) << '\n';

  auto summary = open_out(out_dir / "summary.csv");
  summary << "point";
  for (const auto& a : axes) summary << ',' << csv_field(a);
  summary << ",runs,completed,diverged,mean,std_error,ci95_low,ci95_high,median\n";
  std::size_t diverged_total = 0;
  for (const auto& p : points) {
    std::vector<double> finals;
    std::size_t diverged = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].point != p.index) continue;
      if (results[i].diverged || !std::isfinite(results[i].final_value))
        ++diverged;
      else
        finals.push_back(results[i].final_value);
    }
    diverged_total += diverged;
    const SummaryStats s = summarize(finals);
    summary << p.index;
    for (const auto& [key, value] : p.assignments) summary << ',' << csv_field(value);
    summary << ',' << runs << ',' << finals.size() << ',' << diverged << ',' << csv_number(s.mean)
            << ',' << csv_number(s.std_error) << ',' << csv_number(s.ci_low) << ','
            << csv_number(s.ci_high) << ',' << csv_number(s.median) << '\n';
  }
  return diverged_total;
}

void dump_hidden_states(const Checkpoint& ckpt, std::size_t steps, std::uint64_t seed,
                        std::ostream& out) {
  const ExperimentConfig& c = ckpt.config;
  const CellParams& params = ckpt.params;
  RunRngs rng(seed);
  auto env = make_environment(c.env, rng.env);
  const bool control = c.experiment() == ExperimentKind::kControl;
  CellRunner runner;

  out << "step,state,prev_action";
  for (std::size_t i = 0; i < params.spec.state_size(); ++i) out << ",h" << i;
  out << '\n';

  bool in_episode = false;
  std::size_t episode_steps = 0;
  std::vector<double> obs, h;
  std::size_t prev = 0;
  for (std::size_t step = 1; step <= steps; ++step) {
    if (!in_episode) {
      obs = env->reset(rng.env);
      h.assign(params.s0().begin(), params.s0().end());
      prev = 0;
      in_episode = true;
      episode_steps = 0;
    }
    h = runner.step(params, h, obs, prev);
    out << step << ',' << env->state_label() << ',' << prev;
    for (double v : h) out << ',' << fmt::format("{}", v);
    out << '\n';
    std::size_t a;
    if (control)
      a = select_action(runner.head(params, h), c.control.epsilon, rng.act);
    else
      a = uniform_index(rng.act, env->num_actions());
    EnvStep s = env->step(a);
    ++episode_steps;
    obs = s.obs;
    prev = a;
    const std::size_t limit = env->max_episode_steps();
    if (s.terminal || (limit && episode_steps >= limit)) in_episode = false;
  }
}

InterventionScript parse_intervention_script(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("intervention script is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("phases") || !doc["phases"].is_array())
    throw ConfigError("intervention script needs a \"phases\" list");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "phases")
      throw ConfigError(fmt::format("intervention script: unknown key '{}'", it.key()));
  InterventionScript script;
  for (const json& p : doc["phases"]) {
    if (!p.is_object()) throw ConfigError("intervention phase must be an object");
    InterventionPhase phase;
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (it.key() == "steps") {
        if (!it->is_number_integer() || it->get<long long>() < 0)
          throw ConfigError("intervention phase steps must be a non-negative integer");
        phase.steps = it->get<std::size_t>();
      } else if (it.key() == "forced_actions") {
        if (!it->is_array()) throw ConfigError("forced_actions must be a list");
        for (const json& a : *it) {
          if (!a.is_number_integer() || a.get<long long>() < 0)
            throw ConfigError("forced actions must be non-negative integers");
          phase.forced_actions.push_back(a.get<std::size_t>());
        }
      } else if (it.key() == "start_heading") {
        if (!it->is_null()) phase.start_heading = parse_heading(*it);
      } else {
        throw ConfigError(fmt::format("intervention phase: unknown key '{}'", it.key()));
      }
    }
    script.phases.push_back(std::move(phase));
  }
  return script;
}

RunResult run_intervention_from_checkpoint(const Checkpoint& ckpt,
                                           const InterventionScript& script,
                                           std::uint64_t seed, std::ostream& out) {
  const ExperimentConfig& c = ckpt.config;
  if (c.experiment() != ExperimentKind::kControl)
    throw ConfigError("interventions need a control checkpoint");
  RunRngs rng(seed);
  auto env = make_environment(c.env, rng.env);
  script.validate(*env);
  QAgent agent(ckpt.params, c.optimizer, control_settings(c));

  out << "phase,episode,total_steps,total_reward,success\n";
  RunResult r;
  r.metric = "final_success";
  std::vector<double> last_phase;
  const std::size_t final_phase = script.phases.empty() ? 0 : script.phases.size() - 1;
  try {
    run_intervention(agent, *env, script, rng.env, rng.act, rng.replay,
                     [&](std::size_t phase, const EpisodeRecord& e) {
                       out << phase << ',' << e.episode << ',' << e.steps << ','
                           << csv_number(e.total_reward) << ',' << (e.success ? 1 : 0) << '\n';
                       if (phase == final_phase) last_phase.push_back(e.success ? 1.0 : 0.0);
                     });
  } catch (const NonFiniteError& e) {
    r.diverged = true;
    r.message = e.what();
  } catch (const DivergedError& e) {
    r.diverged = true;
    r.message = e.what();
  }
  r.steps_completed = agent.total_steps();
  r.episodes = agent.episodes();
  r.final_value = last_phase.empty() ? kNaN : tail_mean(last_phase, c.metrics.final_fraction);
  return r;
}

}  // namespace actrnn
