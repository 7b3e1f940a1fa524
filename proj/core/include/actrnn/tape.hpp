// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation tape over the fixed primitive set the recurrent
// cells are built from. Values live in one contiguous pool; each record keeps
// offsets into it, so a cleared tape is reused without reallocating.

#ifndef ACTRNN_TAPE_HPP
#define ACTRNN_TAPE_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "actrnn/params.hpp"

namespace actrnn {

/// Raised when a forward value or a gradient stops being finite. Training
/// loops treat it as a diverged run.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t step, std::string op);
  std::size_t step() const { return step_; }
  const std::string& op() const { return op_; }

 private:
  std::size_t step_;
  std::string op_;
};

struct Var {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kNone;
  bool valid() const { return id != kNone; }
};

enum class TapeOp : std::uint8_t {
  kConstant,
  kLeaf,
  kParam,
  kMatVec,
  kMatTVec,
  kNMode,
  kAdd,
  kSub,
  kMul,
  kTanh,
  kSigmoid,
  kRelu,
  kOneMinus,
  kConcat,
  kSlice,
  kGroupSoftmax,
};

const char* to_string(TapeOp op);

class Tape {
 public:
  Tape() = default;
  explicit Tape(const ParamSet& params) : params_(&params) {}

  /// Drops all records (keeps capacity) and rebinds the parameter source.
  void reset(const ParamSet& params);
  void clear();

  /// Step index reported by NonFiniteError.
  void set_step(std::size_t t) { step_ = t; }

  Var constant(std::span<const double> v);
  /// Differentiable input that is not a parameter (the initial hidden state).
  Var leaf(std::span<const double> v);
  Var param(ParamId id);

  /// W x for a parameter W with shape {rows, cols}.
  Var matvec(ParamId w, Var x);
  /// W^T x for a parameter W with shape {rows, cols}.
  Var matvec_t(ParamId w, Var x);
  /// W x_2 x x_3 a for a parameter with shape {I, J, K}.
  Var nmode(ParamId w, Var x, Var a);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var relu(Var x);
  Var one_minus(Var x);
  Var concat(Var a, Var b);
  Var slice(Var x, std::size_t offset, std::size_t len);
  /// x viewed as `groups` consecutive blocks of equal length; softmax is taken
  /// across blocks, separately for every position within a block.
  Var group_softmax(Var x, std::size_t groups);

  std::span<const double> value(Var v) const;
  std::size_t size(Var v) const { return records_.at(v.id).size; }
  std::size_t num_records() const { return records_.size(); }
  TapeOp op(Var v) const { return records_.at(v.id).op; }

  /// Reverse sweep from `out` seeded with d(loss)/d(out). Parameter gradients
  /// are added into `grads`, which must share the bound ParamSet's layout.
  /// A tape can be swept once; reuse requires clear() or reset().
  void backward(Var out, std::span<const double> seed, ParamSet& grads);
  /// Gradient of a leaf or intermediate after backward().
  std::span<const double> grad(Var v) const;
  bool consumed() const { return consumed_; }
  const ParamSet* bound_params() const { return params_; }

 private:
  struct Record {
    TapeOp op;
    bool needs_grad;
    std::uint32_t in0;
    std::uint32_t in1;
    ParamId param;
    std::uint32_t offset;
    std::uint32_t size;
    std::int64_t aux;  // one-hot index, slice offset, group count
  };

  Var push(TapeOp op, std::size_t size, std::uint32_t in0, std::uint32_t in1, ParamId param,
           std::int64_t aux, bool needs_grad);
  double* out_ptr(Var v) { return values_.data() + records_[v.id].offset; }
  const double* val_ptr(std::uint32_t id) const { return values_.data() + records_[id].offset; }
  void check_finite(Var v);
  void check_same(Var a, Var b, const char* op) const;
  void backprop_record(const Record& r, ParamSet& grads);
  const ParamArray& param_array(ParamId id, std::size_t ndims) const;

  const ParamSet* params_ = nullptr;
  std::vector<Record> records_;
  std::vector<double> values_;
  std::vector<double> grads_;
  std::size_t step_ = 0;
  bool consumed_ = false;
};

}  // namespace actrnn

#endif  // ACTRNN_TAPE_HPP
