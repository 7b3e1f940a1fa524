// SPDX-License-Identifier: Apache-2.0
//
// Order-3 tensors with modes (out, input, action) and the contraction kernels
// behind the multiplicative and factored recurrent updates.

#ifndef ACTRNN_TENSOR_OPS_HPP
#define ACTRNN_TENSOR_OPS_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace actrnn {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// Non-owning view of an I x J x K tensor.
///
/// Storage is action-major: slice k (the I x J matrix W[:,:,k]) is contiguous
/// and row-major, so a one-hot action reads a single block.
struct Tensor3View {
  std::span<const double> values;
  std::size_t I = 0;
  std::size_t J = 0;
  std::size_t K = 0;

  static constexpr std::size_t offset(std::size_t i, std::size_t j, std::size_t k,
                                      std::size_t I, std::size_t J) {
    return (k * I + i) * J + j;
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[offset(i, j, k, I, J)];
  }
  std::span<const double> slice(std::size_t k) const {
    return values.subspan(k * I * J, I * J);
  }
};

class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t I, std::size_t J, std::size_t K);
  Tensor3(std::size_t I, std::size_t J, std::size_t K, std::vector<double> values);

  std::size_t dim_out() const { return I_; }
  std::size_t dim_in() const { return J_; }
  std::size_t dim_action() const { return K_; }

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values_[Tensor3View::offset(i, j, k, I_, J_)];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[Tensor3View::offset(i, j, k, I_, J_)];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  Tensor3View view() const { return {values_, I_, J_, K_}; }

  /// The I x J matrix W[:,:,k].
  Matrix slice(std::size_t k) const;

 private:
  std::size_t I_ = 0, J_ = 0, K_ = 0;
  std::vector<double> values_;
};

/// CP-factored order-3 tensor: W_ijk = sum_r lambda_r out_ir in_jr act_kr.
struct FactoredTensor {
  Matrix w_out;  // I x M
  Matrix w_in;   // J x M
  Matrix w_act;  // K x M
  std::vector<double> lambda;

  std::size_t rank() const { return lambda.size(); }
  void validate() const;
};

/// Tucker-factored order-3 tensor: W_ijk = sum_pqr g_pqr a_ip b_jq c_kr.
/// The core's modes are (P, Q, R); ranks are independent.
struct TuckerTensor {
  Tensor3 core;
  Matrix a;  // I x P
  Matrix b;  // J x Q
  Matrix c;  // K x R

  void validate() const;
};

// result_i = sum_jk W_ijk x_j a_k
std::vector<double> nmode_contract(const Tensor3View& w, std::span<const double> x,
                                   std::span<const double> a);
inline std::vector<double> nmode_contract(const Tensor3& w, std::span<const double> x,
                                          std::span<const double> a) {
  return nmode_contract(w.view(), x, a);
}

/// Writes W x_2 x x_3 a into out (length I). No allocation.
void nmode_contract_into(const Tensor3View& w, std::span<const double> x,
                         std::span<const double> a, std::span<double> out);

std::vector<double> cp_contract(const FactoredTensor& f, std::span<const double> x,
                                std::span<const double> a);
std::vector<double> tucker_contract(const TuckerTensor& t, std::span<const double> x,
                                    std::span<const double> a);
Tensor3 cp_reconstruct(const FactoredTensor& f);

/// Index of the single 1 if `a` is exactly one-hot, otherwise -1.
long onehot_index(std::span<const double> a);

}  // namespace actrnn

#endif  // ACTRNN_TENSOR_OPS_HPP
