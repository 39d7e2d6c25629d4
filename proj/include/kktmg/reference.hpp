#pragma once

#include <array>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kktmg/multigrid.hpp"

namespace kktmg {

/// Target states with a closed-form sine expansion on the unit square.
enum class TargetKind { One, Bubble };

std::string_view target_name(TargetKind kind);
/// "one" / "1" and "bubble".
TargetKind parse_target(std::string_view name);
double target_value(TargetKind kind, const std::array<double, 3>& x);
/// Coefficient of sin(m pi x1) sin(n pi x2) in the expansion of y_d.
double target_coefficient(TargetKind kind, int m, int n);

/// (p, y) coefficients of one mode with Laplace eigenvalue `lambda` and
/// target coefficient d: y = d / (1 + beta lambda^2), p = -beta lambda y.
std::pair<double, double> mode_solution(double beta, double lambda, double d);

/// sum_{i,j} coeff(i, j) sin(modes[i] pi x1) sin(modes[j] pi x2)
struct SineSeries {
  std::vector<int> modes;
  Eigen::MatrixXd coeff;

  double value(double x1, double x2) const;
  std::array<double, 2> gradient(double x1, double x2) const;
  /// Closed forms from orthogonality: ||phi_mn||^2 = 1/4, |phi_mn|_1^2 = pi^2 (m^2+n^2)/4.
  double l2_norm_sq() const;
  double h1_semi_sq() const;
};

struct ExactSolution {
  SineSeries p;  // adjoint state
  SineSeries y;  // state
  int truncation = 0;
  /// Relative size of the last doubling's contribution to the slowest
  /// converging norm; an upper estimate of the dropped tail.
  double tail_estimate = 0.0;
  bool tail_ok = true;
};

/// Solution of the optimality system -Lap p = y - y_d, -Lap y = -p / beta
/// with homogeneous Dirichlet data, truncated to modes <= n_max.
ExactSolution exact_solution(double beta, TargetKind yd, int n_max);
/// Doubles the truncation until the tail estimate is below `tol`, up to `cap`.
ExactSolution exact_solution_adaptive(double beta, TargetKind yd, double tol = 1e-10, int cap = 4096);

struct ErrorNorms {
  double rel_H1_p = 0.0, rel_L2_p = 0.0, rel_H1_y = 0.0, rel_L2_y = 0.0;
  double abs_H1_p = 0.0, abs_L2_p = 0.0, abs_H1_y = 0.0, abs_L2_y = 0.0;
  double norm_H1_p = 0.0, norm_L2_p = 0.0, norm_H1_y = 0.0, norm_L2_y = 0.0;
};

/// Errors of the piecewise linear (p_h, y_h) against the series, integrated
/// with a degree-4 rule on every cell. Throws if the series tail is too
/// large for three-digit reporting.
ErrorNorms error_norms(const MeshLevel& mesh, const Vector& p_h, const Vector& y_h, const ExactSolution& exact);

struct ControlErrors {
  double rel_H1 = 0.0;
  double rel_L2 = 0.0;
};
/// Relative errors of u_h = -p_h / beta against u = -p / beta.
ControlErrors control_error(const ErrorNorms& p_errors, double beta);

struct OriginalSolution {
  Vector p_bar;  // on the finest level
  Vector y_bar;
  FmgResult fmg;
  double seconds = 0.0;
};

/// Solves the unbalanced P1 system for y_d by full multigrid on the balanced
/// system and maps back with p = beta^{1/4} p~, y = beta^{-1/4} y~.
OriginalSolution solve_original(const SaddleMultigrid& mg, TargetKind yd);

/// Balanced right-hand sides (coefficient form) on levels 0..K for y_d.
std::vector<BlockVector> balanced_rhs(const Hierarchy& h, double beta, const ScalarField& yd);

}  // namespace kktmg
