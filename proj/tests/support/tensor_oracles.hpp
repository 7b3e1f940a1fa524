// SPDX-License-Identifier: Apache-2.0
//
// Brute-force tensor oracles shared by the unit tests and the acceptance run.

#ifndef ACTRNN_TESTS_TENSOR_ORACLES_HPP
#define ACTRNN_TESTS_TENSOR_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "actrnn/params.hpp"
#include "actrnn/tensor_ops.hpp"

namespace actrnn::testing {

inline std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, -1.0, 1.0);
  return v;
}

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& x : m.values) x = uniform(rng, -1.0, 1.0);
  return m;
}

inline Tensor3 random_tensor(Rng& rng, std::size_t I, std::size_t J, std::size_t K) {
  return Tensor3(I, J, K, random_vec(rng, I * J * K));
}

// Plain triple loop over (i, j, k) reading at(i, j, k).
inline std::vector<double> brute_nmode(const Tensor3& w, const std::vector<double>& x,
                                       const std::vector<double>& a) {
  std::vector<double> out(w.dim_out(), 0.0);
  for (std::size_t i = 0; i < w.dim_out(); ++i)
    for (std::size_t j = 0; j < w.dim_in(); ++j)
      for (std::size_t k = 0; k < w.dim_action(); ++k) out[i] += w.at(i, j, k) * x[j] * a[k];
  return out;
}

inline Tensor3 expand_tucker(const TuckerTensor& t) {
  Tensor3 w(t.a.rows, t.b.rows, t.c.rows);
  for (std::size_t i = 0; i < t.a.rows; ++i)
    for (std::size_t j = 0; j < t.b.rows; ++j)
      for (std::size_t k = 0; k < t.c.rows; ++k) {
        double s = 0.0;
        for (std::size_t p = 0; p < t.core.dim_out(); ++p)
          for (std::size_t q = 0; q < t.core.dim_in(); ++q)
            for (std::size_t r = 0; r < t.core.dim_action(); ++r)
              s += t.core.at(p, q, r) * t.a(i, p) * t.b(j, q) * t.c(k, r);
        w.at(i, j, k) = s;
      }
  return w;
}

inline double max_rel(const std::vector<double>& got, const std::vector<double>& want) {
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    scale = std::max(scale, std::abs(want[i]));
    err = std::max(err, std::abs(got[i] - want[i]));
  }
  return scale == 0.0 ? err : err / scale;
}

inline FactoredTensor random_cp(Rng& rng, std::size_t I, std::size_t J, std::size_t K, std::size_t M) {
  FactoredTensor f;
  f.w_out = random_matrix(rng, I, M);
  f.w_in = random_matrix(rng, J, M);
  f.w_act = random_matrix(rng, K, M);
  f.lambda = random_vec(rng, M);
  return f;
}


inline Tensor3 expand_cp(const FactoredTensor& f) {
  Tensor3 w(f.w_out.rows, f.w_in.rows, f.w_act.rows);
  for (std::size_t i = 0; i < f.w_out.rows; ++i)
    for (std::size_t j = 0; j < f.w_in.rows; ++j)
      for (std::size_t k = 0; k < f.w_act.rows; ++k) {
        double s = 0.0;
        for (std::size_t m = 0; m < f.lambda.size(); ++m)
          s += f.lambda[m] * f.w_out(i, m) * f.w_in(j, m) * f.w_act(k, m);
        w.at(i, j, k) = s;
      }
  return w;
}

struct ContractionCheck {
  double cp_max_rel = 0.0;
  double tucker_max_rel = 0.0;
};

// Random small instances (dims 1..6, ranks 1..5) against the expanded
// tensor contracted by a plain triple loop.
inline ContractionCheck check_random_contractions(std::uint64_t seed, int instances) {
  Rng rng(seed);
  ContractionCheck out;
  auto dim = [&](std::size_t hi) { return 1 + uniform_index(rng, hi); };
  for (int n = 0; n < instances; ++n) {
    const std::size_t I = dim(6), J = dim(6), K = dim(4);
    auto x = random_vec(rng, J), a = random_vec(rng, K);
    FactoredTensor f = random_cp(rng, I, J, K, dim(5));
    out.cp_max_rel =
        std::max(out.cp_max_rel, max_rel(cp_contract(f, x, a), brute_nmode(expand_cp(f), x, a)));
    TuckerTensor t{random_tensor(rng, dim(3), dim(3), dim(3)), {}, {}, {}};
    t.a = random_matrix(rng, I, t.core.dim_out());
    t.b = random_matrix(rng, J, t.core.dim_in());
    t.c = random_matrix(rng, K, t.core.dim_action());
    out.tucker_max_rel = std::max(
        out.tucker_max_rel, max_rel(tucker_contract(t, x, a), brute_nmode(expand_tucker(t), x, a)));
  }
  return out;
}

}  // namespace actrnn::testing

#endif  // ACTRNN_TESTS_TENSOR_ORACLES_HPP
