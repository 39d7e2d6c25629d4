#pragma once

#include <random>

#include <Eigen/Dense>

#include "kktmg/fem.hpp"
#include "kktmg/random.hpp"
#include "kktmg/saddle.hpp"

namespace kktmg::test {

inline Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

/// Relative distance |a - b| / max(|a|, |b|, tiny).
inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

inline BlockVector random_block(int dofs, int level, std::mt19937_64& rng) {
  return BlockVector(random_vector(2 * dofs, rng), level);
}

/// Dense matrix of a linear map on R^n, one column per unit vector.
template <class Op>
Eigen::MatrixXd columns_of(int n, Op&& op) {
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e[j] = 1.0;
    m.col(j) = op(e);
  }
  return m;
}

}  // namespace kktmg::test
