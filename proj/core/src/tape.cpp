// SPDX-License-Identifier: Apache-2.0

#include "actrnn/tape.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "actrnn/tensor_ops.hpp"

namespace actrnn {

NonFiniteError::NonFiniteError(std::size_t step, std::string op)
    : std::runtime_error(fmt::format("non-finite value at unroll step {} in op '{}'", step, op)),
      step_(step),
      op_(std::move(op)) {}

const char* to_string(TapeOp op) {
  switch (op) {
    case TapeOp::kConstant: return "constant";
    case TapeOp::kLeaf: return "leaf";
    case TapeOp::kParam: return "param";
    case TapeOp::kMatVec: return "matvec";
    case TapeOp::kMatTVec: return "matvec_t";
    case TapeOp::kNMode: return "nmode";
    case TapeOp::kAdd: return "add";
    case TapeOp::kSub: return "sub";
    case TapeOp::kMul: return "mul";
    case TapeOp::kTanh: return "tanh";
    case TapeOp::kSigmoid: return "sigmoid";
    case TapeOp::kRelu: return "relu";
    case TapeOp::kOneMinus: return "one_minus";
    case TapeOp::kConcat: return "concat";
    case TapeOp::kSlice: return "slice";
    case TapeOp::kGroupSoftmax: return "group_softmax";
  }
  return "?";
}

void Tape::reset(const ParamSet& params) {
  params_ = &params;
  clear();
}

void Tape::clear() {
  records_.clear();
  values_.clear();
  grads_.clear();
  step_ = 0;
  consumed_ = false;
}

Var Tape::push(TapeOp op, std::size_t size, std::uint32_t in0, std::uint32_t in1, ParamId param,
               std::int64_t aux, bool needs_grad) {
  if (consumed_) throw std::logic_error("tape already consumed by backward(); clear it first");
  const auto offset = static_cast<std::uint32_t>(values_.size());
  values_.resize(values_.size() + size);
  records_.push_back(Record{op, needs_grad, in0, in1, param, offset,
                            static_cast<std::uint32_t>(size), aux});
  return Var{static_cast<std::uint32_t>(records_.size() - 1)};
}

std::span<const double> Tape::value(Var v) const {
  const Record& r = records_.at(v.id);
  return {values_.data() + r.offset, r.size};
}

std::span<const double> Tape::grad(Var v) const {
  if (!consumed_) throw std::logic_error("Tape::grad called before backward()");
  const Record& r = records_.at(v.id);
  return {grads_.data() + r.offset, r.size};
}

void Tape::check_finite(Var v) {
  const Record& r = records_[v.id];
  const double* p = values_.data() + r.offset;
  for (std::uint32_t i = 0; i < r.size; ++i) {
    if (!std::isfinite(p[i])) throw NonFiniteError(step_, to_string(r.op));
  }
}

void Tape::check_same(Var a, Var b, const char* op) const {
  if (size(a) != size(b)) {
    throw DimensionError(fmt::format("{}: operand sizes {} and {} differ", op, size(a), size(b)));
  }
}

const ParamArray& Tape::param_array(ParamId id, std::size_t ndims) const {
  if (params_ == nullptr) throw std::logic_error("tape has no bound ParamSet");
  const ParamArray& p = (*params_)[id];
  if (p.shape.size() != ndims) {
    throw DimensionError(fmt::format("parameter '{}' has {} dims, op expects {}", p.name,
                                     p.shape.size(), ndims));
  }
  return p;
}

Var Tape::constant(std::span<const double> v) {
  Var out = push(TapeOp::kConstant, v.size(), Var::kNone, Var::kNone, 0, 0, false);
  std::copy(v.begin(), v.end(), out_ptr(out));
  check_finite(out);
  return out;
}

Var Tape::leaf(std::span<const double> v) {
  Var out = push(TapeOp::kLeaf, v.size(), Var::kNone, Var::kNone, 0, 0, true);
  std::copy(v.begin(), v.end(), out_ptr(out));
  check_finite(out);
  return out;
}

Var Tape::param(ParamId id) {
  if (params_ == nullptr) throw std::logic_error("tape has no bound ParamSet");
  const ParamArray& p = (*params_)[id];
  Var out = push(TapeOp::kParam, p.size(), Var::kNone, Var::kNone, id, 0, true);
  std::copy(p.values.begin(), p.values.end(), out_ptr(out));
  return out;
}

Var Tape::matvec(ParamId w, Var x) {
  const ParamArray& p = param_array(w, 2);
  const std::size_t rows = p.shape[0], cols = p.shape[1];
  if (size(x) != cols)
    throw DimensionError(fmt::format("matvec '{}': input length {}, expected {}", p.name,
                                     size(x), cols));
  Var out = push(TapeOp::kMatVec, rows, x.id, Var::kNone, w, 0, true);
  const double* W = p.values.data();
  const double* xv = val_ptr(x.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* row = W + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * xv[j];
    y[i] = acc;
  }
  check_finite(out);
  return out;
}

Var Tape::matvec_t(ParamId w, Var x) {
  const ParamArray& p = param_array(w, 2);
  const std::size_t rows = p.shape[0], cols = p.shape[1];
  if (size(x) != rows)
    throw DimensionError(fmt::format("matvec_t '{}': input length {}, expected {}", p.name,
                                     size(x), rows));
  Var out = push(TapeOp::kMatTVec, cols, x.id, Var::kNone, w, 0, true);
  const double* W = p.values.data();
  const double* xv = val_ptr(x.id);
  double* y = out_ptr(out);
  std::fill(y, y + cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double xi = xv[i];
    if (xi == 0.0) continue;
    const double* row = W + i * cols;
    for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * xi;
  }
  check_finite(out);
  return out;
}

Var Tape::nmode(ParamId w, Var x, Var a) {
  const ParamArray& p = param_array(w, 3);
  const std::size_t I = p.shape[0], J = p.shape[1], K = p.shape[2];
  if (size(x) != J || size(a) != K)
    throw DimensionError(fmt::format("nmode '{}': inputs ({}, {}), expected ({}, {})", p.name,
                                     size(x), size(a), J, K));
  // A constant one-hot action reduces the contraction to one slice.
  long hot = -1;
  if (records_[a.id].op == TapeOp::kConstant) hot = onehot_index(value(a));
  Var out = push(TapeOp::kNMode, I, x.id, a.id, w, hot, true);
  Tensor3View view{p.values, I, J, K};
  std::span<const double> xv(val_ptr(x.id), J);
  std::span<double> y(out_ptr(out), I);
  if (hot >= 0) {
    auto s = view.slice(static_cast<std::size_t>(hot));
    for (std::size_t i = 0; i < I; ++i) {
      const double* row = s.data() + i * J;
      double acc = 0.0;
      for (std::size_t j = 0; j < J; ++j) acc += row[j] * xv[j];
      y[i] = acc;
    }
  } else {
    nmode_contract_into(view, xv, std::span<const double>(val_ptr(a.id), K), y);
  }
  check_finite(out);
  return out;
}

Var Tape::add(Var a, Var b) {
  check_same(a, b, "add");
  const bool ng = records_[a.id].needs_grad || records_[b.id].needs_grad;
  Var out = push(TapeOp::kAdd, size(a), a.id, b.id, 0, 0, ng);
  const double* av = val_ptr(a.id);
  const double* bv = val_ptr(b.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < size(out); ++i) y[i] = av[i] + bv[i];
  check_finite(out);
  return out;
}

Var Tape::sub(Var a, Var b) {
  check_same(a, b, "sub");
  const bool ng = records_[a.id].needs_grad || records_[b.id].needs_grad;
  Var out = push(TapeOp::kSub, size(a), a.id, b.id, 0, 0, ng);
  const double* av = val_ptr(a.id);
  const double* bv = val_ptr(b.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < size(out); ++i) y[i] = av[i] - bv[i];
  check_finite(out);
  return out;
}

Var Tape::mul(Var a, Var b) {
  check_same(a, b, "mul");
  const bool ng = records_[a.id].needs_grad || records_[b.id].needs_grad;
  Var out = push(TapeOp::kMul, size(a), a.id, b.id, 0, 0, ng);
  const double* av = val_ptr(a.id);
  const double* bv = val_ptr(b.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < size(out); ++i) y[i] = av[i] * bv[i];
  check_finite(out);
  return out;
}

Var Tape::tanh(Var x) {
  Var out = push(TapeOp::kTanh, size(x), x.id, Var::kNone, 0, 0, records_[x.id].needs_grad);
  const double* xv = val_ptr(x.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < size(out); ++i) y[i] = std::tanh(xv[i]);
  check_finite(out);
  return out;
}

Var Tape::sigmoid(Var x) {
  Var out = push(TapeOp::kSigmoid, size(x), x.id, Var::kNone, 0, 0, records_[x.id].needs_grad);
  const double* xv = val_ptr(x.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < size(out); ++i) y[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  check_finite(out);
  return out;
}

Var Tape::relu(Var x) {
  Var out = push(TapeOp::kRelu, size(x), x.id, Var::kNone, 0, 0, records_[x.id].needs_grad);
  const double* xv = val_ptr(x.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < size(out); ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return out;
}

Var Tape::one_minus(Var x) {
  Var out = push(TapeOp::kOneMinus, size(x), x.id, Var::kNone, 0, 0, records_[x.id].needs_grad);
  const double* xv = val_ptr(x.id);
  double* y = out_ptr(out);
  for (std::size_t i = 0; i < size(out); ++i) y[i] = 1.0 - xv[i];
  return out;
}

Var Tape::concat(Var a, Var b) {
  const bool ng = records_[a.id].needs_grad || records_[b.id].needs_grad;
  const std::size_t na = size(a);
  Var out = push(TapeOp::kConcat, na + size(b), a.id, b.id, 0, 0, ng);
  const double* av = val_ptr(a.id);
  const double* bv = val_ptr(b.id);
  double* y = out_ptr(out);
  std::copy(av, av + na, y);
  std::copy(bv, bv + size(b), y + na);
  return out;
}

Var Tape::slice(Var x, std::size_t offset, std::size_t len) {
  if (offset + len > size(x))
    throw DimensionError(fmt::format("slice [{}, {}) out of range for length {}", offset,
                                     offset + len, size(x)));
  Var out = push(TapeOp::kSlice, len, x.id, Var::kNone, 0, static_cast<std::int64_t>(offset),
                 records_[x.id].needs_grad);
  const double* xv = val_ptr(x.id) + offset;
  std::copy(xv, xv + len, out_ptr(out));
  return out;
}

Var Tape::group_softmax(Var x, std::size_t groups) {
  if (groups == 0 || size(x) % groups != 0)
    throw DimensionError(fmt::format("group_softmax: length {} not divisible into {} groups",
                                     size(x), groups));
  Var out = push(TapeOp::kGroupSoftmax, size(x), x.id, Var::kNone, 0,
                 static_cast<std::int64_t>(groups), records_[x.id].needs_grad);
  const std::size_t width = size(x) / groups;
  const double* xv = val_ptr(x.id);
  double* y = out_ptr(out);
  for (std::size_t e = 0; e < width; ++e) {
    double mx = xv[e];
    for (std::size_t g = 1; g < groups; ++g) mx = std::max(mx, xv[g * width + e]);
    double z = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      y[g * width + e] = std::exp(xv[g * width + e] - mx);
      z += y[g * width + e];
    }
    for (std::size_t g = 0; g < groups; ++g) y[g * width + e] /= z;
  }
  check_finite(out);
  return out;
}

void Tape::backward(Var out, std::span<const double> seed, ParamSet& grads) {
  if (consumed_) throw std::logic_error("tape already consumed by backward()");
  if (params_ != nullptr && !grads.same_layout(*params_))
    throw DimensionError("backward: gradient set layout does not match parameters");
  if (seed.size() != size(out))
    throw DimensionError(fmt::format("backward: seed length {}, output length {}", seed.size(),
                                     size(out)));
  consumed_ = true;
  grads_.assign(values_.size(), 0.0);
  std::copy(seed.begin(), seed.end(), grads_.begin() + records_[out.id].offset);
  for (std::size_t idx = out.id + 1; idx-- > 0;) {
    const Record& r = records_[idx];
    if (!r.needs_grad) continue;
    backprop_record(r, grads);
  }
}

void Tape::backprop_record(const Record& r, ParamSet& grads) {
  const double* g = grads_.data() + r.offset;
  const double* y = values_.data() + r.offset;
  auto needs = [&](std::uint32_t id) { return records_[id].needs_grad; };
  auto gin = [&](std::uint32_t id) { return grads_.data() + records_[id].offset; };
  const std::size_t n = r.size;

  switch (r.op) {
    case TapeOp::kConstant:
    case TapeOp::kLeaf:
      break;
    case TapeOp::kParam: {
      auto& dp = grads[r.param].values;
      for (std::size_t i = 0; i < n; ++i) dp[i] += g[i];
      break;
    }
    case TapeOp::kMatVec: {
      const ParamArray& p = (*params_)[r.param];
      const std::size_t rows = p.shape[0], cols = p.shape[1];
      const double* x = val_ptr(r.in0);
      double* dW = grads[r.param].values.data();
      for (std::size_t i = 0; i < rows; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        double* drow = dW + i * cols;
        for (std::size_t j = 0; j < cols; ++j) drow[j] += gi * x[j];
      }
      if (needs(r.in0)) {
        double* dx = gin(r.in0);
        const double* W = p.values.data();
        for (std::size_t i = 0; i < rows; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* row = W + i * cols;
          for (std::size_t j = 0; j < cols; ++j) dx[j] += gi * row[j];
        }
      }
      break;
    }
    case TapeOp::kMatTVec: {
      const ParamArray& p = (*params_)[r.param];
      const std::size_t rows = p.shape[0], cols = p.shape[1];
      const double* x = val_ptr(r.in0);
      double* dW = grads[r.param].values.data();
      const double* W = p.values.data();
      const bool dx_needed = needs(r.in0);
      double* dx = dx_needed ? gin(r.in0) : nullptr;
      for (std::size_t i = 0; i < rows; ++i) {
        double* drow = dW + i * cols;
        const double* row = W + i * cols;
        const double xi = x[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          drow[j] += xi * g[j];
          acc += row[j] * g[j];
        }
        if (dx_needed) dx[i] += acc;
      }
      break;
    }
    case TapeOp::kNMode: {
      const ParamArray& p = (*params_)[r.param];
      const std::size_t I = p.shape[0], J = p.shape[1], K = p.shape[2];
      const double* x = val_ptr(r.in0);
      const double* a = val_ptr(r.in1);
      double* dW = grads[r.param].values.data();
      const double* W = p.values.data();
      const bool dx_needed = needs(r.in0);
      const bool da_needed = needs(r.in1);
      double* dx = dx_needed ? gin(r.in0) : nullptr;
      double* da = da_needed ? gin(r.in1) : nullptr;
      for (std::size_t k = 0; k < K; ++k) {
        if (r.aux >= 0 && static_cast<std::size_t>(r.aux) != k) continue;
        const double ak = a[k];
        if (ak == 0.0 && !da_needed) continue;
        const double* s = W + k * I * J;
        double* ds = dW + k * I * J;
        double dak = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* row = s + i * J;
          double* drow = ds + i * J;
          const double gia = gi * ak;
          double wx = 0.0;
          for (std::size_t j = 0; j < J; ++j) {
            drow[j] += gia * x[j];
            wx += row[j] * x[j];
            if (dx_needed) dx[j] += gia * row[j];
          }
          dak += gi * wx;
        }
        if (da_needed) da[k] += dak;
      }
      break;
    }
    case TapeOp::kAdd: {
      if (needs(r.in0)) {
        double* d = gin(r.in0);
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
      }
      if (needs(r.in1)) {
        double* d = gin(r.in1);
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
      }
      break;
    }
    case TapeOp::kSub: {
      if (needs(r.in0)) {
        double* d = gin(r.in0);
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
      }
      if (needs(r.in1)) {
        double* d = gin(r.in1);
        for (std::size_t i = 0; i < n; ++i) d[i] -= g[i];
      }
      break;
    }
    case TapeOp::kMul: {
      const double* av = val_ptr(r.in0);
      const double* bv = val_ptr(r.in1);
      if (needs(r.in0)) {
        double* d = gin(r.in0);
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * bv[i];
      }
      if (needs(r.in1)) {
        double* d = gin(r.in1);
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * av[i];
      }
      break;
    }
    case TapeOp::kTanh: {
      double* d = gin(r.in0);
      for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case TapeOp::kSigmoid: {
      double* d = gin(r.in0);
      for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
    }
    case TapeOp::kRelu: {
      const double* x = val_ptr(r.in0);
      double* d = gin(r.in0);
      for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) d[i] += g[i];
      break;
    }
    case TapeOp::kOneMinus: {
      double* d = gin(r.in0);
      for (std::size_t i = 0; i < n; ++i) d[i] -= g[i];
      break;
    }
    case TapeOp::kConcat: {
      const std::size_t na = records_[r.in0].size;
      if (needs(r.in0)) {
        double* d = gin(r.in0);
        for (std::size_t i = 0; i < na; ++i) d[i] += g[i];
      }
      if (needs(r.in1)) {
        double* d = gin(r.in1);
        for (std::size_t i = na; i < n; ++i) d[i - na] += g[i];
      }
      break;
    }
    case TapeOp::kSlice: {
      double* d = gin(r.in0) + r.aux;
      for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
      break;
    }
    case TapeOp::kGroupSoftmax: {
      const std::size_t groups = static_cast<std::size_t>(r.aux);
      const std::size_t width = n / groups;
      double* d = gin(r.in0);
      for (std::size_t e = 0; e < width; ++e) {
        double dot = 0.0;
        for (std::size_t k = 0; k < groups; ++k) dot += y[k * width + e] * g[k * width + e];
        for (std::size_t k = 0; k < groups; ++k)
          d[k * width + e] += y[k * width + e] * (g[k * width + e] - dot);
      }
      break;
    }
  }
}

}  // namespace actrnn
