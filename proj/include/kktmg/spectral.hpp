#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kktmg/multigrid.hpp"

namespace kktmg {

/// E_k u: one cycle with zero right-hand side started from u.
BlockVector apply_E(const SaddleMultigrid& mg, CycleKind kind, const BlockVector& u, int m1, int m2);

/// E_k assembled column by column.
Eigen::MatrixXd dense_E(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2);
/// S = K Ghat^{-1} K as a dense matrix.
Eigen::MatrixXd dense_S(const MeshNorms& norms);
/// sqrt of the largest eigenvalue of E' S E x = mu S x.
double operator_norm_dense(const Eigen::MatrixXd& E, const Eigen::MatrixXd& S);

struct PowerOptions {
  double tol = 1e-4;
  int max_iters = 300;
  unsigned seed = 12345;
};

struct PowerResult {
  double norm = 0.0;
  int iterations = 0;
  bool converged = true;
  std::vector<double> history;
};

/// |||E_k||| in the |||.|||_{1,k} norm: power iteration on E^* E, with the
/// iterates kept as a Lanczos basis so the estimate is the top Ritz value of
/// their span. The adjoint of E_k in that norm is K^{-1} Ghat E' Ghat^{-1} K,
/// where E' is the same cycle with m1 and m2 exchanged. `history` holds one
/// estimate per application of E^* E.
PowerResult operator_norm_power(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2,
                                const MeshNorms& norms, const PowerOptions& options = {});

struct ContractionEntry {
  int level = 0;
  double norm_Ek = 0.0;
  int iterations = 0;
  bool converged = false;
  double seconds_per_cycle = 0.0;
  double est_min = 0.0;
  double est_max = 0.0;
  double lambda = 0.0;
  bool dense = false;
  std::string error;
};

struct ContractionReport {
  std::string domain;
  double beta = 0.0;
  CycleKind cycle = CycleKind::W;
  int m1 = 1;
  int m2 = 1;
  unsigned seed = 0;
  std::vector<ContractionEntry> entries;
};

struct MeasureOptions {
  PowerOptions power;
  /// Levels with at most this many dofs per variable use the dense path.
  int dense_threshold = 400;
  bool timing = true;
};

/// Median wall time of three cycles after one warm-up.
double time_cycle(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2, unsigned seed = 7);

ContractionEntry measure_contraction(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2,
                                     const MeasureOptions& options = {});

struct SweepSpec {
  std::vector<DomainKind> domains;
  std::vector<double> betas;
  std::vector<int> levels;
  /// (m1, m2) pairs.
  std::vector<std::pair<int, int>> smoothing;
  CycleKind cycle = CycleKind::W;
  CycleConfig base;
  MeasureOptions measure;
  int jobs = 1;
};

/// One report per (domain, beta, smoothing pair), in that nesting order.
/// A failing cell is recorded in its entry's error field.
std::vector<ContractionReport> sweep(const SweepSpec& spec);

void write_csv_header(std::ostream& os);
void write_csv(const std::vector<ContractionReport>& reports, std::ostream& os);

}  // namespace kktmg
