#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseLU>

#include "kktmg/inner.hpp"
#include "kktmg/saddle.hpp"

namespace kktmg {

enum class CycleKind { W, V, TwoGrid, FMG };

std::string_view cycle_name(CycleKind kind);
/// w, v, two-grid (or two_grid), fmg.
CycleKind parse_cycle(std::string_view name);

struct CycleConfig {
  double beta = 1e-2;
  int m1 = 1;
  int m2 = 1;
  CycleKind cycle = CycleKind::W;
  /// Cycle iterated on each level by full multigrid.
  CycleKind fmg_cycle = CycleKind::W;
  InnerOptions inner;
  /// <= 0 selects 1.1 times the largest Lanczos estimate of
  /// lambda_max / (1 + sqrt(beta) h^-2) over levels >= 1.
  double c_dagger = 0.0;
  int lanczos_steps = 100;
  unsigned seed = 2024;
  double fmg_tolerance = 1e-8;
  int fmg_max_iterations = 100;
};

enum class Regime { WellConditioned, IllConditioned };

struct DampingEntry {
  int level = 0;
  double lambda = 0.0;
  Regime regime = Regime::WellConditioned;
  double est_min = 0.0;
  double est_max = 0.0;
  /// sqrt(beta) h^-2
  double sigma = 0.0;
};

struct DampingTable {
  std::vector<DampingEntry> levels;
  double c_dagger = 0.0;

  const DampingEntry& at(int level) const { return levels.at(level); }
};

struct LanczosResult {
  double min = 0.0;
  double max = 0.0;
  int steps = 0;
  int restarts = 0;
};

/// Extreme Ritz values of a symmetric operator of size n after at most
/// `steps` Lanczos steps with full reorthogonalization. An invariant
/// subspace found early is extended by a fresh random direction, at most
/// three times.
LanczosResult lanczos_extremes(const std::function<Vector(const Vector&)>& op, int n, int steps, unsigned seed);

struct FmgResult {
  std::vector<BlockVector> solutions;
  std::vector<int> iterations;
  std::vector<std::vector<double>> residual_history;
};

class FmgError : public std::runtime_error {
 public:
  FmgError(const std::string& what, int level, std::vector<double> history)
      : std::runtime_error(what), level_(level), history_(std::move(history)) {}
  int level() const { return level_; }
  const std::vector<double>& history() const { return history_; }

 private:
  int level_;
  std::vector<double> history_;
};

/// The outer multigrid method for the balanced saddle point system on every
/// level of a hierarchy.
class SaddleMultigrid {
 public:
  SaddleMultigrid(std::shared_ptr<const Hierarchy> hierarchy, CycleConfig config);
  /// Uses a precomputed damping table (for example one shared between
  /// configurations differing only in m1/m2).
  SaddleMultigrid(std::shared_ptr<const Hierarchy> hierarchy, CycleConfig config, DampingTable damping);

  const Hierarchy& hierarchy() const { return *hierarchy_; }
  std::shared_ptr<const Hierarchy> hierarchy_ptr() const { return hierarchy_; }
  const CycleConfig& config() const { return config_; }
  const DampingTable& damping() const { return damping_; }
  const ReactionDiffusionHierarchy& inner() const { return inner_; }
  const SaddleOperator& saddle(int level) const { return saddles_.at(level); }
  int max_level() const { return hierarchy_->max_level(); }

  BlockVector smooth_pre(const BlockVector& u, const BlockVector& f, double lambda) const;
  BlockVector smooth_post(const BlockVector& u, const BlockVector& f, double lambda) const;

  /// One cycle of the configured kind with the configured m1, m2.
  BlockVector cycle(const BlockVector& f, const BlockVector& guess) const;
  BlockVector cycle(const BlockVector& f, const BlockVector& guess, int m1, int m2) const;
  BlockVector cycle(CycleKind kind, const BlockVector& f, const BlockVector& guess, int m1, int m2) const;

  /// Solution of B_k x = f, i.e. K_k x = D_k f.
  BlockVector direct_solve(const BlockVector& f) const;

  /// R = (h_k / h_{k-1})^2 P^T per block, the [.,.]-adjoint of prolongation.
  BlockVector restrict_to_coarse(const BlockVector& u) const;
  BlockVector prolongate(const BlockVector& u) const;

  /// Nested iteration: exact on level 0, then on each finer level the
  /// prolongated solution is improved by cycles until
  /// ||D f - K u||_2 <= tol ||D f||_2. rhs[k] is the coefficient form f_k.
  FmgResult full_multigrid(const std::vector<BlockVector>& rhs) const;

 private:
  BlockVector cycle_impl(CycleKind kind, const BlockVector& f, const BlockVector& guess, int m1, int m2) const;

  std::shared_ptr<const Hierarchy> hierarchy_;
  CycleConfig config_;
  ReactionDiffusionHierarchy inner_;
  std::vector<SaddleOperator> saddles_;
  DampingTable damping_;
  std::vector<std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>>> direct_;
};

/// Lanczos estimates of the extreme eigenvalues of B C^{-1} B on each level
/// and the damping factors derived from them.
DampingTable build_damping(const std::vector<SaddleOperator>& saddles, const ReactionDiffusionHierarchy& inner,
                           const CycleConfig& config);

}  // namespace kktmg
