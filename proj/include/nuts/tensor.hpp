// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_TENSOR_HPP
#define NUTS_TENSOR_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nuts {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense row-major 64-bit array. Vectors are carried as 1 x n rows.
using Tensor = Matrix<double>;

using Index = Eigen::Index;
using TokenId = int;
using TokenIds = std::vector<TokenId>;

/// Per-token admission flags indexed by token id.
using TokenMask = std::vector<bool>;

using Rng = std::mt19937_64;

/// A precondition on an argument was not met.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A non-finite value appeared in a computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(mix_seed(master) ^ (stream * 0xd1b54a32d192ed03ULL));
}

template <typename Scalar = double>
Matrix<Scalar> standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Matrix<Scalar> out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = normal(rng);
  return out;
}

template <typename Scalar = double>
Matrix<Scalar> uniform_matrix(Index rows, Index cols, Scalar bound, Rng& rng) {
  std::uniform_real_distribution<Scalar> uniform(-bound, bound);
  Matrix<Scalar> out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = uniform(rng);
  return out;
}

/// Index of the largest entry of a row; ties resolve to the lowest index.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& row) {
  Index best = 0;
  for (Index j = 1; j < row.size(); ++j) {
    if (row.coeff(j) > row.coeff(best)) best = j;
  }
  return best;
}

}  // namespace nuts

#endif  // NUTS_TENSOR_HPP
