#pragma once

#include <memory>
#include <utility>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "kktmg/fem.hpp"

namespace kktmg {

/// Coefficient pair (p, y) over the interior vertices of one level, stored
/// contiguously as [p; y].
struct BlockVector {
  Vector data;
  int level = 0;

  BlockVector() = default;
  BlockVector(int dofs, int lvl) : data(Vector::Zero(2 * dofs)), level(lvl) {}
  BlockVector(Vector values, int lvl) : data(std::move(values)), level(lvl) {}
  static BlockVector from_parts(const Vector& p, const Vector& y, int lvl);

  int dofs() const { return static_cast<int>(data.size() / 2); }
  auto p() { return data.head(dofs()); }
  auto y() { return data.tail(dofs()); }
  auto p() const { return data.head(dofs()); }
  auto y() const { return data.tail(dofs()); }
};

/// K = [[sqrt(beta) A, -M], [-M, -sqrt(beta) A]] on one level, together with
/// the reaction-diffusion matrix G = sqrt(beta) A + M that defines the
/// weighted H^1 norm.
class SaddleOperator {
 public:
  SaddleOperator(const LevelOperators& ops, double beta);

  double beta() const { return beta_; }
  double sqrt_beta() const { return sqrt_beta_; }
  int level() const { return ops_->level; }
  int dofs() const { return ops_->dofs(); }
  double h() const { return ops_->h; }
  const LevelOperators& fe() const { return *ops_; }
  const SparseMatrix& K() const { return K_; }
  const SparseMatrix& G() const { return G_; }

  Vector apply_K(const Vector& u) const { return K_ * u; }
  /// Coefficient representation of the operator defined by
  /// [B u, v]_k = B(u, v), i.e. D^{-1} K u.
  BlockVector apply_B(const BlockVector& u) const;
  /// The bilinear form B(u, v) evaluated from the separate blocks.
  double form(const BlockVector& u, const BlockVector& v) const;
  /// [u, v]_k
  double metric_dot(const BlockVector& u, const BlockVector& v) const;
  /// ||v||^2_{H^1_beta} = v'Mv + sqrt(beta) v'Av
  double h1beta_sq(const Vector& v) const;
  double pair_norm_sq(const BlockVector& u) const { return h1beta_sq(u.p()) + h1beta_sq(u.y()); }
  /// sqrt(beta) h^{-2}; the smoother regime switches at 1.
  double conditioning() const { return sqrt_beta_ / (h() * h()); }

 private:
  const LevelOperators* ops_;
  double beta_;
  double sqrt_beta_;
  SparseMatrix K_;
  SparseMatrix G_;
};

/// Returns w = (p - y, -y - p) and B(u, w) / ||w||, where ||.|| is the
/// H^1_beta pair norm.
std::pair<BlockVector, double> inf_sup_witness(const SaddleOperator& saddle, const BlockVector& u);

/// Exact factorizations for the mesh-dependent norms
///   |||u|||_{0,k}^2 = [u, u]_k,   |||u|||_{1,k}^2 = u' K Ghat^{-1} K u,
/// with Ghat = blockdiag(G, G) solved by sparse Cholesky.
class MeshNorms {
 public:
  explicit MeshNorms(const SaddleOperator& saddle);

  const SaddleOperator& saddle() const { return *saddle_; }
  double norm_0k(const BlockVector& u) const;
  double norm_1k(const BlockVector& u) const;
  /// S u with S = K Ghat^{-1} K.
  Vector apply_S(const Vector& u) const;
  Vector solve_Ghat(const Vector& b) const;
  Vector apply_Ghat(const Vector& u) const;
  Vector solve_K(const Vector& b) const;

 private:
  const SaddleOperator* saddle_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> g_factor_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> k_factor_;
};

}  // namespace kktmg
