// SPDX-License-Identifier: Apache-2.0

#include "actrnn/tensor_ops.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace actrnn {

namespace {

void require(bool ok, const char* what, std::size_t got, std::size_t want) {
  if (!ok) {
    throw DimensionError(fmt::format("{}: got length {}, expected {}", what, got, want));
  }
}

}  // namespace

Tensor3::Tensor3(std::size_t I, std::size_t J, std::size_t K)
    : I_(I), J_(J), K_(K), values_(I * J * K, 0.0) {}

Tensor3::Tensor3(std::size_t I, std::size_t J, std::size_t K, std::vector<double> values)
    : I_(I), J_(J), K_(K), values_(std::move(values)) {
  require(values_.size() == I * J * K, "Tensor3 values", values_.size(), I * J * K);
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("Tensor3: non-finite entry");
  }
}

Matrix Tensor3::slice(std::size_t k) const {
  Matrix m(I_, J_);
  auto s = view().slice(k);
  std::copy(s.begin(), s.end(), m.values.begin());
  return m;
}

void FactoredTensor::validate() const {
  const std::size_t m = lambda.size();
  require(w_out.cols == m, "FactoredTensor w_out columns", w_out.cols, m);
  require(w_in.cols == m, "FactoredTensor w_in columns", w_in.cols, m);
  require(w_act.cols == m, "FactoredTensor w_act columns", w_act.cols, m);
}

void TuckerTensor::validate() const {
  require(a.cols == core.dim_out(), "TuckerTensor A columns", a.cols, core.dim_out());
  require(b.cols == core.dim_in(), "TuckerTensor B columns", b.cols, core.dim_in());
  require(c.cols == core.dim_action(), "TuckerTensor C columns", c.cols, core.dim_action());
}

long onehot_index(std::span<const double> a) {
  long idx = -1;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) continue;
    if (a[k] != 1.0 || idx >= 0) return -1;
    idx = static_cast<long>(k);
  }
  return idx;
}

void nmode_contract_into(const Tensor3View& w, std::span<const double> x,
                         std::span<const double> a, std::span<double> out) {
  require(x.size() == w.J, "nmode_contract x", x.size(), w.J);
  require(a.size() == w.K, "nmode_contract a", a.size(), w.K);
  require(out.size() == w.I, "nmode_contract out", out.size(), w.I);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < w.K; ++k) {
    const double ak = a[k];
    if (ak == 0.0) continue;
    auto s = w.slice(k);
    for (std::size_t i = 0; i < w.I; ++i) {
      const double* row = s.data() + i * w.J;
      double acc = 0.0;
      for (std::size_t j = 0; j < w.J; ++j) acc += row[j] * x[j];
      out[i] += ak * acc;
    }
  }
}

std::vector<double> nmode_contract(const Tensor3View& w, std::span<const double> x,
                                   std::span<const double> a) {
  std::vector<double> out(w.I);
  nmode_contract_into(w, x, a, out);
  return out;
}

std::vector<double> cp_contract(const FactoredTensor& f, std::span<const double> x,
                                std::span<const double> a) {
  f.validate();
  require(x.size() == f.w_in.rows, "cp_contract x", x.size(), f.w_in.rows);
  require(a.size() == f.w_act.rows, "cp_contract a", a.size(), f.w_act.rows);
  const std::size_t m = f.rank();
  // p_r = lambda_r (x^T W_in)_r (a^T W_act)_r
  std::vector<double> p(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double u = 0.0, v = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) u += x[j] * f.w_in(j, r);
    for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * f.w_act(k, r);
    p[r] = f.lambda[r] * u * v;
  }
  std::vector<double> out(f.w_out.rows, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < m; ++r) acc += f.w_out(i, r) * p[r];
    out[i] = acc;
  }
  return out;
}

std::vector<double> tucker_contract(const TuckerTensor& t, std::span<const double> x,
                                    std::span<const double> a) {
  t.validate();
  require(x.size() == t.b.rows, "tucker_contract x", x.size(), t.b.rows);
  require(a.size() == t.c.rows, "tucker_contract a", a.size(), t.c.rows);
  const std::size_t P = t.core.dim_out(), Q = t.core.dim_in(), R = t.core.dim_action();
  std::vector<double> xb(Q, 0.0), ac(R, 0.0);
  for (std::size_t q = 0; q < Q; ++q)
    for (std::size_t j = 0; j < x.size(); ++j) xb[q] += x[j] * t.b(j, q);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t k = 0; k < a.size(); ++k) ac[r] += a[k] * t.c(k, r);
  // core contracted on modes 2 and 3, then mapped through A
  std::vector<double> g = nmode_contract(t.core.view(), xb, ac);
  std::vector<double> out(t.a.rows, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t p = 0; p < P; ++p) acc += t.a(i, p) * g[p];
    out[i] = acc;
  }
  return out;
}

Tensor3 cp_reconstruct(const FactoredTensor& f) {
  f.validate();
  const std::size_t I = f.w_out.rows, J = f.w_in.rows, K = f.w_act.rows;
  Tensor3 w(I, J, K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < f.rank(); ++r)
          acc += f.lambda[r] * f.w_out(i, r) * f.w_in(j, r) * f.w_act(k, r);
        w.at(i, j, k) = acc;
      }
  return w;
}

}  // namespace actrnn
