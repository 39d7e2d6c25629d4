#pragma once

#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "kktmg/saddle.hpp"

namespace kktmg {

struct InnerOptions {
  int nu = 4;
  /// Jacobi weight; 0 selects 2/3 in 2D and 4/7 in 3D.
  double damping = 0.0;
  /// Replace the V-cycle by an exact solve with G on every level.
  bool exact = false;
};

struct ContractionEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Approximate inverse of -sqrt(beta) Laplace + 1 on every level of a
/// hierarchy: one symmetric V(nu, nu) cycle with damped Jacobi smoothing,
/// Galerkin transfers and a Cholesky solve on level 0, always started from
/// zero so that the result is a fixed linear map.
class ReactionDiffusionHierarchy {
 public:
  ReactionDiffusionHierarchy(std::shared_ptr<const Hierarchy> hierarchy, double beta, InnerOptions options = {});

  int max_level() const { return hierarchy_->max_level(); }
  double beta() const { return beta_; }
  const InnerOptions& options() const { return options_; }
  double jacobi_damping() const { return omega_; }
  const SparseMatrix& G(int level) const { return levels_.at(level).G; }

  /// x ~ G^{-1} (h_k^2 rhs).
  Vector apply_Linv(int level, const Vector& rhs) const;
  /// Blockwise apply_Linv on (p, y).
  BlockVector apply_Cinv(const BlockVector& u) const;
  /// Coefficient form of C_k: (h_k^{-2} G p, h_k^{-2} G y).
  BlockVector apply_C(const BlockVector& u) const;
  /// One cycle on G x = b from zero; the raw approximate inverse of G.
  Vector apply_cycle(int level, const Vector& b) const;

  /// G-norm of the V-cycle error operator I - B G by power iteration.
  ContractionEstimate estimate_cycle_contraction(int level, double tol = 1e-6, int max_iters = 500,
                                                 unsigned seed = 1) const;

 private:
  struct Level {
    SparseMatrix G;
    Vector inv_diag;
  };
  void vcycle(int level, const Vector& b, Vector& x) const;
  Vector exact_solve(int level, const Vector& b) const;

  std::shared_ptr<const Hierarchy> hierarchy_;
  double beta_;
  InnerOptions options_;
  double omega_;
  std::vector<Level> levels_;
  std::vector<std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>> factors_;
};

}  // namespace kktmg
