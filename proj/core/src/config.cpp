// SPDX-License-Identifier: Apache-2.0

#include "actrnn/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "config_json.hpp"

namespace actrnn {

namespace detail {

namespace {

// Reads keys from one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", where()));
  }

  bool has(const char* key) const { return j_.contains(key); }

  void get(const char* key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0)
        throw ConfigError(fmt::format("{}.{}: expected a non-negative integer", where(), key));
      out = v->get<std::size_t>();
    }
  }
  void get(const char* key, std::uint64_t& out, int) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0)
        throw ConfigError(fmt::format("{}.{}: expected a non-negative integer", where(), key));
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number())
        throw ConfigError(fmt::format("{}.{}: expected a number", where(), key));
      out = v->get<double>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string())
        throw ConfigError(fmt::format("{}.{}: expected a string", where(), key));
      out = v->get<std::string>();
    }
  }
  const json* section(const char* key) { return take(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(fmt::format("{}: unknown key '{}'", where(), it.key()));
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string rmsve_name(RmsveKind k) {
  return k == RmsveKind::kNormOverCount ? "norm_over_count" : "root_mean";
}

RmsveKind parse_rmsve(const std::string& s) {
  if (s == "norm_over_count") return RmsveKind::kNormOverCount;
  if (s == "root_mean") return RmsveKind::kRootMean;
  throw ConfigError(fmt::format("metrics.rmsve: unknown variant '{}'", s));
}

// Protocol constants per domain; keys in the file override them.
void apply_domain_defaults(ExperimentConfig& c) {
  c.steps = 300000;
  c.optimizer = OptimizerConfig{};
  c.optimizer.kind = OptimizerKind::kRmsprop;
  c.training = TrainingSettings{};
  c.control = ControlParams{};
  c.metrics = MetricsSettings{};
  switch (c.env.kind) {
    case EnvKind::kRingWorld:
      c.env.size = 10;
      c.optimizer.rho = 0.9;
      c.training.tau = 1;
      c.training.batch_size = 4;
      c.training.buffer_capacity = 1000;
      c.training.warmup = 1000;
      break;
    case EnvKind::kTMaze:
    case EnvKind::kDirTMaze:
    case EnvKind::kMaskedGridWorld:
      c.env.size = 10;
      c.env.height = 10;
      c.env.aliased = 10;
      c.optimizer.rho = 0.99;
      c.training.tau = 12;
      c.training.batch_size = 8;
      c.training.buffer_capacity = 10000;
      c.training.warmup = 1000;
      c.control.gamma = 0.99;
      c.control.epsilon = 0.1;
      break;
  }
  c.training.update_every = 4;
  c.training.target_sync = 1000;
}

}  // namespace

json spec_to_json(const CellSpec& s) {
  return json{{"kind", std::string(to_string(s.kind))},
              {"hidden", s.hidden},
              {"factors", s.factors},
              {"action_embed", s.action_embed},
              {"experts", s.experts},
              {"gate_hidden", s.gate_hidden}};
}

CellSpec spec_from_json(const json& j) {
  Section sec(j, "cell");
  CellSpec s;
  std::string kind;
  sec.get("kind", kind);
  if (kind.empty()) throw ConfigError("cell.kind is required");
  try {
    s.kind = parse_cell_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!sec.has("hidden")) throw ConfigError("cell.hidden is required");
  sec.get("hidden", s.hidden);
  sec.get("factors", s.factors);
  sec.get("action_embed", s.action_embed);
  sec.get("experts", s.experts);
  sec.get("gate_hidden", s.gate_hidden);
  sec.finish();
  return s;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["steps"] = c.steps;
  j["env"] = {{"name", std::string(to_string(c.env.kind))},
              {"size", c.env.size},
              {"height", c.env.height},
              {"aliased", c.env.aliased},
              {"max_episode_steps", c.env.max_episode_steps}};
  j["cell"] = spec_to_json(c.cell);
  j["optimizer"] = {{"name", std::string(to_string(c.optimizer.kind))},
                    {"lr", c.optimizer.lr},
                    {"rho", c.optimizer.rho},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"epsilon", c.optimizer.epsilon},
                    {"max_grad_norm", c.optimizer.max_grad_norm}};
  j["training"] = {{"tau", c.training.tau},
                   {"mode", c.training.online ? "online" : "replay"},
                   {"batch_size", c.training.batch_size},
                   {"update_every", c.training.update_every},
                   {"target_sync", c.training.target_sync},
                   {"state_mode", std::string(to_string(c.training.state_mode))},
                   {"sequence_anchor", std::string(to_string(c.training.anchor))},
                   {"buffer_capacity", c.training.buffer_capacity},
                   {"warmup", c.training.warmup}};
  j["control"] = {{"epsilon", c.control.epsilon}, {"gamma", c.control.gamma}};
  j["metrics"] = {{"log_interval", c.metrics.log_interval},
                  {"window", c.metrics.window},
                  {"final_window", c.metrics.final_window},
                  {"final_fraction", c.metrics.final_fraction},
                  {"rmsve", rmsve_name(c.metrics.rmsve)},
                  {"loss_interval", c.metrics.loss_interval},
                  {"softmax_interval", c.metrics.softmax_interval},
                  {"checkpoint_every", c.metrics.checkpoint_every}};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  Section top(j, "");
  ExperimentConfig c;

  const json* env = top.section("env");
  if (!env) throw ConfigError("env section is required");
  {
    Section sec(*env, "env");
    std::string name;
    sec.get("name", name);
    if (name.empty()) throw ConfigError("env.name is required");
    try {
      c.env.kind = parse_env_kind(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    apply_domain_defaults(c);
    sec.get("size", c.env.size);
    sec.get("height", c.env.height);
    sec.get("aliased", c.env.aliased);
    sec.get("max_episode_steps", c.env.max_episode_steps);
    sec.finish();
  }

  top.get("seed", c.seed, 0);
  top.get("steps", c.steps);

  const json* cell = top.section("cell");
  if (!cell) throw ConfigError("cell section is required");
  c.cell = spec_from_json(*cell);

  const json* opt = top.section("optimizer");
  if (!opt) throw ConfigError("optimizer section is required");
  {
    Section sec(*opt, "optimizer");
    std::string name = std::string(to_string(c.optimizer.kind));
    sec.get("name", name);
    try {
      c.optimizer.kind = parse_optimizer_kind(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!sec.has("lr")) throw ConfigError("optimizer.lr is required");
    sec.get("lr", c.optimizer.lr);
    sec.get("rho", c.optimizer.rho);
    sec.get("beta1", c.optimizer.beta1);
    sec.get("beta2", c.optimizer.beta2);
    sec.get("epsilon", c.optimizer.epsilon);
    sec.get("max_grad_norm", c.optimizer.max_grad_norm);
    sec.finish();
  }

  if (const json* tr = top.section("training")) {
    Section sec(*tr, "training");
    sec.get("tau", c.training.tau);
    std::string mode = c.training.online ? "online" : "replay";
    sec.get("mode", mode);
    if (mode != "online" && mode != "replay")
      throw ConfigError(fmt::format("training.mode: expected replay or online, got '{}'", mode));
    c.training.online = mode == "online";
    sec.get("batch_size", c.training.batch_size);
    sec.get("update_every", c.training.update_every);
    sec.get("target_sync", c.training.target_sync);
    std::string state_mode(to_string(c.training.state_mode));
    sec.get("state_mode", state_mode);
    try {
      c.training.state_mode = parse_state_mode(state_mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    std::string anchor(to_string(c.training.anchor));
    sec.get("sequence_anchor", anchor);
    try {
      c.training.anchor = parse_sequence_anchor(anchor);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    sec.get("buffer_capacity", c.training.buffer_capacity);
    sec.get("warmup", c.training.warmup);
    sec.finish();
  }

  if (const json* ctl = top.section("control")) {
    Section sec(*ctl, "control");
    sec.get("epsilon", c.control.epsilon);
    sec.get("gamma", c.control.gamma);
    sec.finish();
  }

  if (const json* m = top.section("metrics")) {
    Section sec(*m, "metrics");
    sec.get("log_interval", c.metrics.log_interval);
    sec.get("window", c.metrics.window);
    sec.get("final_window", c.metrics.final_window);
    sec.get("final_fraction", c.metrics.final_fraction);
    std::string rv = rmsve_name(c.metrics.rmsve);
    sec.get("rmsve", rv);
    c.metrics.rmsve = parse_rmsve(rv);
    sec.get("loss_interval", c.metrics.loss_interval);
    sec.get("softmax_interval", c.metrics.softmax_interval);
    sec.get("checkpoint_every", c.metrics.checkpoint_every);
    sec.finish();
  }
  top.finish();

  // Derived cell dimensions.
  Rng scratch(0);
  std::unique_ptr<Environment> probe;
  try {
    probe = make_environment(c.env, scratch);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("env: {}", e.what()));
  }
  c.cell.obs_dim = probe->obs_dim();
  c.cell.num_actions = probe->num_actions();
  c.cell.outputs = c.experiment() == ExperimentKind::kPrediction ? Horde::ring_world().size()
                                                                 : probe->num_actions();
  validate(c);
  return c;
}

}  // namespace detail

void validate(const ExperimentConfig& c) {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(fmt::format("{} must be positive", name));
  };
  positive(c.training.tau, "training.tau");
  positive(c.training.batch_size, "training.batch_size");
  positive(c.training.update_every, "training.update_every");
  positive(c.training.buffer_capacity, "training.buffer_capacity");
  positive(c.metrics.log_interval, "metrics.log_interval");
  positive(c.metrics.window, "metrics.window");
  positive(c.metrics.loss_interval, "metrics.loss_interval");
  positive(c.metrics.softmax_interval, "metrics.softmax_interval");
  positive(c.env.size, "env.size");
  if (c.training.warmup > c.training.buffer_capacity)
    throw ConfigError("training.warmup exceeds training.buffer_capacity");
  if (!(c.optimizer.lr >= 0.0) || !std::isfinite(c.optimizer.lr))
    throw ConfigError("optimizer.lr must be a finite non-negative number");
  if (!(c.optimizer.rho >= 0.0 && c.optimizer.rho < 1.0))
    throw ConfigError("optimizer.rho must lie in [0, 1)");
  if (!(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0) ||
      !(c.optimizer.beta2 >= 0.0 && c.optimizer.beta2 < 1.0))
    throw ConfigError("optimizer betas must lie in [0, 1)");
  if (!(c.optimizer.epsilon > 0.0)) throw ConfigError("optimizer.epsilon must be positive");
  if (!(c.optimizer.max_grad_norm >= 0.0))
    throw ConfigError("optimizer.max_grad_norm must be non-negative");
  if (!(c.control.epsilon >= 0.0 && c.control.epsilon <= 1.0))
    throw ConfigError("control.epsilon must lie in [0, 1]");
  if (!(c.control.gamma >= 0.0 && c.control.gamma <= 1.0))
    throw ConfigError("control.gamma must lie in [0, 1]");
  if (!(c.metrics.final_fraction > 0.0 && c.metrics.final_fraction <= 1.0))
    throw ConfigError("metrics.final_fraction must lie in (0, 1]");
  try {
    c.cell.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(std::string_view text) {
  detail::json j;
  try {
    j = detail::json::parse(text.begin(), text.end());
  } catch (const detail::json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  try {
    return detail::config_from_json(j);
  } catch (const detail::json::exception& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json_string(const ExperimentConfig& config, int indent) {
  return detail::config_to_json(config).dump(indent);
}

}  // namespace actrnn
