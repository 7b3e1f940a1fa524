// SPDX-License-Identifier: Apache-2.0

#include "actrnn/cells.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace actrnn {

namespace {

struct KindInfo {
  CellKind kind;
  std::string_view name;
};

constexpr std::array<KindInfo, 18> kKinds{{
    {CellKind::kRNN, "RNN"},
    {CellKind::kAARNN, "AARNN"},
    {CellKind::kDARNN, "DARNN"},
    {CellKind::kMARNN, "MARNN"},
    {CellKind::kFacRNN, "FacRNN"},
    {CellKind::kDMARNN, "DMARNN"},
    {CellKind::kGRU, "GRU"},
    {CellKind::kAAGRU, "AAGRU"},
    {CellKind::kDAGRU, "DAGRU"},
    {CellKind::kMAGRU, "MAGRU"},
    {CellKind::kFacGRU, "FacGRU"},
    {CellKind::kDMAGRU, "DMAGRU"},
    {CellKind::kCombSoftmaxRNN, "CombSoftmaxRNN"},
    {CellKind::kCombSoftmaxGRU, "CombSoftmaxGRU"},
    {CellKind::kCombConcatRNN, "CombConcatRNN"},
    {CellKind::kCombConcatGRU, "CombConcatGRU"},
    {CellKind::kMoERNN, "MoERNN"},
    {CellKind::kMoEGRU, "MoEGRU"},
}};

constexpr std::array<CellKind, 18> kAllKinds = [] {
  std::array<CellKind, 18> out{};
  for (std::size_t i = 0; i < kKinds.size(); ++i) out[i] = kKinds[i].kind;
  return out;
}();

Encoding single_encoding(CellKind kind) {
  switch (kind) {
    case CellKind::kRNN:
    case CellKind::kGRU:
      return Encoding::kNone;
    case CellKind::kAARNN:
    case CellKind::kAAGRU:
    case CellKind::kDARNN:
    case CellKind::kDAGRU:
      return Encoding::kAdditive;
    case CellKind::kMARNN:
    case CellKind::kMAGRU:
    case CellKind::kDMARNN:
    case CellKind::kDMAGRU:
      return Encoding::kMultiplicative;
    case CellKind::kFacRNN:
    case CellKind::kFacGRU:
      return Encoding::kFactored;
    default:
      throw std::logic_error("single_encoding: combined kind");
  }
}

Combiner combiner_of(CellKind kind) {
  switch (kind) {
    case CellKind::kCombSoftmaxRNN:
    case CellKind::kCombSoftmaxGRU:
      return Combiner::kSoftmax;
    case CellKind::kCombConcatRNN:
    case CellKind::kCombConcatGRU:
      return Combiner::kConcat;
    case CellKind::kMoERNN:
    case CellKind::kMoEGRU:
      return Combiner::kMixture;
    default:
      return Combiner::kSingle;
  }
}

enum class InitRule { kZero, kOnes, kXavier };

struct InitEntry {
  ParamId id;
  InitRule rule;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t slices = 1;
};

class LayoutBuilder {
 public:
  explicit LayoutBuilder(ParamSet& set) : set_(set) {}

  ParamId xavier(const std::string& name, std::size_t rows, std::size_t cols) {
    ParamId id = set_.add(name, {rows, cols});
    rules_.push_back({id, InitRule::kXavier, rows, cols, 1});
    return id;
  }
  ParamId xavier_tensor(const std::string& name, std::size_t I, std::size_t J, std::size_t K) {
    ParamId id = set_.add(name, {I, J, K});
    rules_.push_back({id, InitRule::kXavier, I, J, K});
    return id;
  }
  ParamId zeros(const std::string& name, std::vector<std::size_t> shape) {
    ParamId id = set_.add(name, std::move(shape));
    rules_.push_back({id, InitRule::kZero});
    return id;
  }
  ParamId ones(const std::string& name, std::vector<std::size_t> shape) {
    ParamId id = set_.add(name, std::move(shape));
    rules_.push_back({id, InitRule::kOnes});
    return id;
  }

  void draw(Rng& rng) const {
    for (const auto& r : rules_) {
      auto& v = set_[r.id].values;
      switch (r.rule) {
        case InitRule::kZero:
          std::fill(v.begin(), v.end(), 0.0);
          break;
        case InitRule::kOnes:
          std::fill(v.begin(), v.end(), 1.0);
          break;
        case InitRule::kXavier: {
          // Tensors: every action slice is its own rows x cols Xavier matrix.
          const std::size_t block = r.rows * r.cols;
          for (std::size_t s = 0; s < r.slices; ++s) {
            xavier_uniform(std::span<double>(v).subspan(s * block, block), r.rows, r.cols, rng);
          }
          break;
        }
      }
    }
  }

 private:
  ParamSet& set_;
  std::vector<InitEntry> rules_;
};

BlockLayout build_block(LayoutBuilder& b, const std::string& prefix, BaseUpdate base,
                        Encoding enc, const CellSpec& spec, std::size_t action_width,
                        std::size_t state_offset) {
  const std::size_t n = spec.hidden;
  const std::size_t in = spec.obs_dim + n;
  BlockLayout block;
  block.base = base;
  block.encoding = enc;
  block.state_offset = state_offset;
  block.state_size = n;

  if (enc == Encoding::kFactored) {
    block.factor_in = b.xavier(prefix + "factor_in", in, spec.factors);
    block.factor_action = b.xavier(prefix + "factor_action", action_width, spec.factors);
  }
  const std::vector<std::string> gate_names =
      base == BaseUpdate::kGru ? std::vector<std::string>{"r.", "z.", "h."}
                               : std::vector<std::string>{""};
  for (const auto& g : gate_names) {
    const std::string p = prefix + g;
    GateLayout gate;
    switch (enc) {
      case Encoding::kNone:
        gate.w = b.xavier(p + "W", n, in);
        gate.bias = b.zeros(p + "b", {n});
        break;
      case Encoding::kAdditive:
        gate.w = b.xavier(p + "W", n, in);
        gate.w_action = b.xavier(p + "Wa", n, action_width);
        gate.bias = b.zeros(p + "b", {n});
        break;
      case Encoding::kMultiplicative:
        gate.tensor = b.xavier_tensor(p + "W", n, in, action_width);
        gate.action_bias = b.zeros(p + "B", {n, action_width});
        break;
      case Encoding::kFactored:
        gate.w_out = b.xavier(p + "factor_out", n, spec.factors);
        gate.lambda = b.ones(p + "lambda", {spec.factors});
        gate.bias = b.zeros(p + "b", {n});
        break;
    }
    block.gates.push_back(gate);
  }
  return block;
}

// Cached x-side CP projection: the r and z gates of a GRU read the same x.
struct FactorCache {
  std::uint32_t x_id = Var::kNone;
  Var x_proj;
  Var a_proj;
};

Var gate_preactivation(Tape& t, const BlockLayout& block, const GateLayout& g, Var x, Var a,
                       FactorCache& cache) {
  switch (block.encoding) {
    case Encoding::kNone:
      return t.add(t.matvec(g.w, x), t.param(g.bias));
    case Encoding::kAdditive:
      return t.add(t.add(t.matvec(g.w, x), t.matvec(g.w_action, a)), t.param(g.bias));
    case Encoding::kMultiplicative:
      return t.add(t.nmode(g.tensor, x, a), t.matvec(g.action_bias, a));
    case Encoding::kFactored: {
      if (cache.x_id != x.id) {
        cache.x_id = x.id;
        cache.x_proj = t.matvec_t(block.factor_in, x);
      }
      if (!cache.a_proj.valid()) cache.a_proj = t.matvec_t(block.factor_action, a);
      Var p = t.mul(t.mul(cache.x_proj, cache.a_proj), t.param(g.lambda));
      return t.add(t.matvec(g.w_out, p), t.param(g.bias));
    }
  }
  throw std::logic_error("unknown encoding");
}

Var block_step(Tape& t, const BlockLayout& block, Var h_full, Var obs, Var a) {
  Var h = (block.state_offset == 0 && block.state_size == t.size(h_full))
              ? h_full
              : t.slice(h_full, block.state_offset, block.state_size);
  Var x = t.concat(obs, h);
  FactorCache cache;
  if (block.base == BaseUpdate::kRnn) {
    return t.tanh(gate_preactivation(t, block, block.gates[0], x, a, cache));
  }
  Var r = t.sigmoid(gate_preactivation(t, block, block.gates[0], x, a, cache));
  Var z = t.sigmoid(gate_preactivation(t, block, block.gates[1], x, a, cache));
  Var xh = t.concat(obs, t.mul(r, h));
  Var candidate = t.tanh(gate_preactivation(t, block, block.gates[2], xh, a, cache));
  return t.add(t.mul(t.one_minus(z), h), t.mul(z, candidate));
}

void require_dims(std::size_t got, std::size_t want, const char* what) {
  if (got != want) throw DimensionError(fmt::format("{}: length {}, expected {}", what, got, want));
}

std::size_t action_width(const CellSpec& spec) {
  return uses_action_encoder(spec.kind) ? spec.action_embed : spec.num_actions;
}

}  // namespace

std::string_view to_string(CellKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  for (const auto& k : kKinds)
    if (k.name == name) return k.kind;
  throw std::invalid_argument(fmt::format("unknown cell kind '{}'", name));
}

std::span<const CellKind> all_cell_kinds() { return kAllKinds; }

bool is_gru_based(CellKind kind) {
  switch (kind) {
    case CellKind::kGRU:
    case CellKind::kAAGRU:
    case CellKind::kDAGRU:
    case CellKind::kMAGRU:
    case CellKind::kFacGRU:
    case CellKind::kDMAGRU:
    case CellKind::kCombSoftmaxGRU:
    case CellKind::kCombConcatGRU:
    case CellKind::kMoEGRU:
      return true;
    default:
      return false;
  }
}

bool uses_factors(CellKind kind) { return kind == CellKind::kFacRNN || kind == CellKind::kFacGRU; }

bool uses_action_encoder(CellKind kind) {
  return kind == CellKind::kDARNN || kind == CellKind::kDAGRU || kind == CellKind::kDMARNN ||
         kind == CellKind::kDMAGRU;
}

bool is_mixture(CellKind kind) { return kind == CellKind::kMoERNN || kind == CellKind::kMoEGRU; }

std::size_t CellSpec::state_size() const {
  return combiner_of(kind) == Combiner::kConcat ? 2 * hidden : hidden;
}

void CellSpec::validate() const {
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(fmt::format("cell {}: {}", to_string(kind), msg));
  };
  if (hidden == 0) fail("hidden size must be positive");
  if (obs_dim == 0) fail("observation size must be positive");
  if (num_actions == 0) fail("number of actions must be positive");
  if (outputs == 0) fail("number of outputs must be positive");
  if (uses_factors(kind) && factors == 0) fail("factored cells need factors >= 1");
  if (uses_action_encoder(kind) && action_embed == 0) fail("deep cells need action_embed >= 1");
  if (is_mixture(kind) && (experts == 0 || gate_hidden == 0))
    fail("mixture cells need experts >= 1 and gate_hidden >= 1");
}

ActionEncoding ActionEncoding::onehot(std::size_t action, std::size_t num_actions) {
  if (action >= num_actions)
    throw std::out_of_range(fmt::format("action {} out of range [0, {})", action, num_actions));
  ActionEncoding enc;
  enc.values.assign(num_actions, 0.0);
  enc.values[action] = 1.0;
  return enc;
}

std::vector<double> deep_action_encode(const ActionEncoder& enc, std::span<const double> onehot) {
  require_dims(onehot.size(), enc.weights.cols, "deep_action_encode input");
  require_dims(enc.bias.size(), enc.weights.rows, "deep_action_encode bias");
  std::vector<double> out(enc.weights.rows);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = enc.bias[i];
    for (std::size_t k = 0; k < onehot.size(); ++k) acc += enc.weights(i, k) * onehot[k];
    switch (enc.activation) {
      case Activation::kIdentity: break;
      case Activation::kRelu: acc = acc > 0.0 ? acc : 0.0; break;
      case Activation::kTanh: acc = std::tanh(acc); break;
    }
    out[i] = acc;
  }
  return out;
}

CellParams init_params(const CellSpec& spec, Rng& rng) {
  spec.validate();
  CellParams params;
  params.spec = spec;
  LayoutBuilder b(params.values);
  CellLayout& L = params.layout;
  L.combiner = combiner_of(spec.kind);
  const BaseUpdate base = is_gru_based(spec.kind) ? BaseUpdate::kGru : BaseUpdate::kRnn;
  const std::size_t n = spec.hidden;
  const std::size_t aw = action_width(spec);
  const std::string base_name = base == BaseUpdate::kGru ? "gru." : "rnn.";

  if (uses_action_encoder(spec.kind)) {
    L.encoder_w = b.xavier("encoder.W", spec.action_embed, spec.num_actions);
    L.encoder_b = b.zeros("encoder.b", {spec.action_embed});
  }

  switch (L.combiner) {
    case Combiner::kSingle:
      L.blocks.push_back(
          build_block(b, base_name, base, single_encoding(spec.kind), spec, aw, 0));
      break;
    case Combiner::kSoftmax:
      L.blocks.push_back(
          build_block(b, base_name + "additive.", base, Encoding::kAdditive, spec, aw, 0));
      L.blocks.push_back(build_block(b, base_name + "multiplicative.", base,
                                     Encoding::kMultiplicative, spec, aw, 0));
      L.theta_additive = b.zeros("combine.theta_additive", {n});
      L.theta_multiplicative = b.zeros("combine.theta_multiplicative", {n});
      break;
    case Combiner::kConcat:
      L.blocks.push_back(
          build_block(b, base_name + "additive.", base, Encoding::kAdditive, spec, aw, 0));
      L.blocks.push_back(build_block(b, base_name + "multiplicative.", base,
                                     Encoding::kMultiplicative, spec, aw, n));
      break;
    case Combiner::kMixture: {
      for (std::size_t e = 0; e < spec.experts; ++e) {
        L.blocks.push_back(build_block(b, fmt::format("{}expert{}.", base_name, e), base,
                                       Encoding::kAdditive, spec, aw, 0));
      }
      const std::size_t gate_in = spec.obs_dim + n + spec.num_actions;
      L.gating_w1 = b.xavier("gating.W1", spec.gate_hidden, gate_in);
      L.gating_b1 = b.zeros("gating.b1", {spec.gate_hidden});
      L.gating_w2 = b.xavier("gating.W2", spec.experts * n, spec.gate_hidden);
      L.gating_b2 = b.zeros("gating.b2", {spec.experts * n});
      break;
    }
  }

  L.head_w = b.xavier("head.W", spec.outputs, spec.state_size());
  L.head_b = b.zeros("head.b", {spec.outputs});
  L.s0 = b.zeros("s0", {spec.state_size()});
  b.draw(rng);
  return params;
}

std::size_t count_params(const CellParams& params) { return params.values.total_size(); }

ActionEncoder action_encoder(const CellParams& params) {
  if (!uses_action_encoder(params.spec.kind))
    throw std::invalid_argument(
        fmt::format("cell {} has no action encoder", to_string(params.spec.kind)));
  const auto& w = params.values[params.layout.encoder_w];
  ActionEncoder enc;
  enc.weights = Matrix(w.shape[0], w.shape[1]);
  enc.weights.values = w.values;
  enc.bias = params.values[params.layout.encoder_b].values;
  enc.activation = Activation::kRelu;
  return enc;
}

Var record_action(Tape& tape, const CellParams& params, const ActionEncoding& action) {
  const CellSpec& spec = params.spec;
  if (action.dense) {
    require_dims(action.values.size(), action_width(spec), "dense action encoding");
    return tape.constant(action.values);
  }
  require_dims(action.values.size(), spec.num_actions, "one-hot action");
  if (onehot_index(action.values) < 0)
    throw std::invalid_argument("action encoding is not one-hot");
  Var a = tape.constant(action.values);
  if (!uses_action_encoder(spec.kind)) return a;
  const CellLayout& L = params.layout;
  return tape.relu(tape.add(tape.matvec(L.encoder_w, a), tape.param(L.encoder_b)));
}

Var record_cell_step(Tape& t, const CellParams& params, Var h_prev, Var obs, Var a) {
  const CellSpec& spec = params.spec;
  const CellLayout& L = params.layout;
  require_dims(t.size(h_prev), spec.state_size(), "hidden state");
  require_dims(t.size(obs), spec.obs_dim, "observation");

  switch (L.combiner) {
    case Combiner::kSingle:
      return block_step(t, L.blocks[0], h_prev, obs, a);
    case Combiner::kSoftmax: {
      Var s_add = block_step(t, L.blocks[0], h_prev, obs, a);
      Var s_mul = block_step(t, L.blocks[1], h_prev, obs, a);
      Var w = t.group_softmax(
          t.concat(t.param(L.theta_additive), t.param(L.theta_multiplicative)), 2);
      const std::size_t n = spec.hidden;
      return t.add(t.mul(t.slice(w, 0, n), s_add), t.mul(t.slice(w, n, n), s_mul));
    }
    case Combiner::kConcat:
      return t.concat(block_step(t, L.blocks[0], h_prev, obs, a),
                      block_step(t, L.blocks[1], h_prev, obs, a));
    case Combiner::kMixture: {
      const std::size_t n = spec.hidden;
      Var gate_in = t.concat(t.concat(obs, h_prev), a);
      Var hidden = t.relu(t.add(t.matvec(L.gating_w1, gate_in), t.param(L.gating_b1)));
      Var psi = t.group_softmax(t.add(t.matvec(L.gating_w2, hidden), t.param(L.gating_b2)),
                                spec.experts);
      Var out;
      for (std::size_t e = 0; e < L.blocks.size(); ++e) {
        Var z = block_step(t, L.blocks[e], h_prev, obs, a);
        Var term = t.mul(t.slice(psi, e * n, n), z);
        out = out.valid() ? t.add(out, term) : term;
      }
      return out;
    }
  }
  throw std::logic_error("unknown combiner");
}

Var record_head(Tape& t, const CellParams& params, Var h) {
  return t.add(t.matvec(params.layout.head_w, h), t.param(params.layout.head_b));
}

std::vector<double> cell_forward(const CellParams& params, std::span<const double> h_prev,
                                 std::span<const double> obs, const ActionEncoding& action) {
  Tape tape(params.values);
  Var h = tape.constant(h_prev);
  Var o = tape.constant(obs);
  Var a = record_action(tape, params, action);
  Var out = record_cell_step(tape, params, h, o, a);
  auto v = tape.value(out);
  return {v.begin(), v.end()};
}

std::vector<double> head_forward(const CellParams& params, std::span<const double> h) {
  Tape tape(params.values);
  require_dims(h.size(), params.spec.state_size(), "head input");
  Var out = record_head(tape, params, tape.constant(h));
  auto v = tape.value(out);
  return {v.begin(), v.end()};
}

std::pair<std::vector<double>, std::vector<double>> softmax_weights(const CellParams& params) {
  if (params.layout.combiner != Combiner::kSoftmax)
    throw std::invalid_argument(fmt::format("softmax weights requested for cell {}",
                                            to_string(params.spec.kind)));
  const auto& ta = params.values[params.layout.theta_additive].values;
  const auto& tm = params.values[params.layout.theta_multiplicative].values;
  std::vector<double> wa(ta.size()), wm(tm.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const double mx = std::max(ta[i], tm[i]);
    const double ea = std::exp(ta[i] - mx), em = std::exp(tm[i] - mx);
    wa[i] = ea / (ea + em);
    wm[i] = em / (ea + em);
  }
  return {wa, wm};
}

}  // namespace actrnn
