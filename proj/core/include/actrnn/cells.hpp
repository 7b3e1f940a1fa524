// SPDX-License-Identifier: Apache-2.0
//
// Recurrent cell architectures that differ in how the previous action enters
// the state update: not at all, additively, multiplicatively (order-3 tensor),
// through a CP-factored tensor, through a learned encoder, or through a
// learned combination of an additive and a multiplicative update.
//
// Every cell reads x = [obs; h_prev] and the previous action a_{t-1}. A linear
// head maps the state to the prediction/Q outputs, and s0 is the learnable
// state used at the start of every episode. All of them live in one ParamSet.

#ifndef ACTRNN_CELLS_HPP
#define ACTRNN_CELLS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actrnn/params.hpp"
#include "actrnn/tape.hpp"
#include "actrnn/tensor_ops.hpp"

namespace actrnn {

enum class CellKind {
  kRNN,
  kAARNN,
  kDARNN,
  kMARNN,
  kFacRNN,
  kDMARNN,
  kGRU,
  kAAGRU,
  kDAGRU,
  kMAGRU,
  kFacGRU,
  kDMAGRU,
  kCombSoftmaxRNN,
  kCombSoftmaxGRU,
  kCombConcatRNN,
  kCombConcatGRU,
  kMoERNN,
  kMoEGRU,
};

std::string_view to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view name);
std::span<const CellKind> all_cell_kinds();

bool is_gru_based(CellKind kind);
bool uses_factors(CellKind kind);
bool uses_action_encoder(CellKind kind);
bool is_mixture(CellKind kind);

/// Architecture and dimensions of a cell plus its output head.
struct CellSpec {
  CellKind kind = CellKind::kRNN;
  std::size_t hidden = 0;       // n
  std::size_t obs_dim = 0;
  std::size_t num_actions = 0;  // |A|
  std::size_t outputs = 0;
  std::size_t factors = 0;      // M, factored kinds
  std::size_t action_embed = 0; // b, deep kinds
  std::size_t experts = 0;      // mixture kinds
  std::size_t gate_hidden = 0;  // mixture gating-network width

  /// Length of the recurrent state (2n for concatenated combos).
  std::size_t state_size() const;
  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
  bool operator==(const CellSpec&) const = default;
};

enum class Encoding { kNone, kAdditive, kMultiplicative, kFactored };
enum class BaseUpdate { kRnn, kGru };
enum class Combiner { kSingle, kSoftmax, kConcat, kMixture };

inline constexpr ParamId kNoParam = static_cast<ParamId>(-1);

/// Parameters producing one preactivation (an RNN update or one GRU gate).
struct GateLayout {
  ParamId w = kNoParam;         // n x (obs + n)
  ParamId bias = kNoParam;      // n
  ParamId w_action = kNoParam;  // n x |a|, additive
  ParamId tensor = kNoParam;    // n x (obs + n) x |a|, multiplicative
  ParamId action_bias = kNoParam;  // n x |a|, multiplicative per-action bias
  ParamId w_out = kNoParam;     // n x M, factored
  ParamId lambda = kNoParam;    // M, factored
};

/// One recurrent update reading `state_size` entries of h_prev at `state_offset`.
struct BlockLayout {
  BaseUpdate base = BaseUpdate::kRnn;
  Encoding encoding = Encoding::kNone;
  std::vector<GateLayout> gates;  // RNN: {h}; GRU: {r, z, h}
  ParamId factor_in = kNoParam;   // (obs + n) x M, shared by the gates
  ParamId factor_action = kNoParam;  // |a| x M, shared by the gates
  std::size_t state_offset = 0;
  std::size_t state_size = 0;
};

struct CellLayout {
  Combiner combiner = Combiner::kSingle;
  std::vector<BlockLayout> blocks;
  ParamId theta_additive = kNoParam;
  ParamId theta_multiplicative = kNoParam;
  ParamId encoder_w = kNoParam;  // b x |A|
  ParamId encoder_b = kNoParam;
  ParamId gating_w1 = kNoParam;  // g x (obs + n + |A|)
  ParamId gating_b1 = kNoParam;
  ParamId gating_w2 = kNoParam;  // (K n) x g
  ParamId gating_b2 = kNoParam;
  ParamId head_w = kNoParam;     // outputs x state
  ParamId head_b = kNoParam;
  ParamId s0 = kNoParam;
};

/// Learnable weights of a cell, its head and its episode-start state.
struct CellParams {
  CellSpec spec;
  CellLayout layout;
  ParamSet values;

  std::span<const double> s0() const { return values[layout.s0].values; }
};

/// Previous-action input: a one-hot vector over the action set, or a dense
/// vector already produced by an action encoder.
struct ActionEncoding {
  std::vector<double> values;
  bool dense = false;

  static ActionEncoding onehot(std::size_t action, std::size_t num_actions);
  static ActionEncoding embedding(std::vector<double> v) { return {std::move(v), true}; }
};

enum class Activation { kIdentity, kRelu, kTanh };

/// Dense action encoder |A| -> b.
struct ActionEncoder {
  Matrix weights;  // b x |A|
  std::vector<double> bias;
  Activation activation = Activation::kRelu;
};

std::vector<double> deep_action_encode(const ActionEncoder& enc, std::span<const double> onehot);

/// Builds the layout for `spec` and draws every weight from `rng`: Xavier
/// uniform per matrix (per action slice for tensors), zero biases, zero s0,
/// unit CP weights, zero combination logits.
CellParams init_params(const CellSpec& spec, Rng& rng);

/// Total number of learnable scalars, head and s0 included.
std::size_t count_params(const CellParams& params);

/// One recurrent step. Throws DimensionError on shape mismatch and
/// NonFiniteError if h_prev is not finite.
std::vector<double> cell_forward(const CellParams& params, std::span<const double> h_prev,
                                 std::span<const double> obs, const ActionEncoding& action);

/// Head outputs (predictions or Q values) for a state.
std::vector<double> head_forward(const CellParams& params, std::span<const double> h);

/// The cell's deep action encoder; throws for kinds without one.
ActionEncoder action_encoder(const CellParams& params);

/// Per-element softmax weights (additive, multiplicative) of a CombSoftmax
/// cell. Throws std::invalid_argument for other kinds.
std::pair<std::vector<double>, std::vector<double>> softmax_weights(const CellParams& params);

// Tape recording used by cell_forward and by the BPTT unroll.

/// Records the action input for one step: the constant itself, or the
/// encoder applied to it for deep kinds (dense inputs pass through).
Var record_action(Tape& tape, const CellParams& params, const ActionEncoding& action);
Var record_cell_step(Tape& tape, const CellParams& params, Var h_prev, Var obs, Var action);
Var record_head(Tape& tape, const CellParams& params, Var h);

}  // namespace actrnn

#endif  // ACTRNN_CELLS_HPP
