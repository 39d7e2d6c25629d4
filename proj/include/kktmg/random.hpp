#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace kktmg {

/// Uniform entries in [-1, 1) from a seeded Mersenne twister.
inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace kktmg
