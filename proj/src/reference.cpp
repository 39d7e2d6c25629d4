#include "kktmg/reference.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "kktmg/quadrature.hpp"

namespace kktmg {

namespace {

constexpr double pi = std::numbers::pi;

std::vector<int> odd_modes(int n_max) {
  std::vector<int> modes;
  for (int m = 1; m <= n_max; m += 2) modes.push_back(m);
  return modes;
}

struct NormSums {
  double p_l2 = 0.0, p_h1 = 0.0, y_l2 = 0.0, y_h1 = 0.0;
};

NormSums norm_sums(const ExactSolution& e) {
  return {e.p.l2_norm_sq(), e.p.h1_semi_sq(), e.y.l2_norm_sq(), e.y.h1_semi_sq()};
}

/// Maps coordinates to indices of distinct values (up to 1e-12).
class CoordinateIndex {
 public:
  int insert(double x) {
    const long long key = std::llround(x * 1e12);
    auto [it, fresh] = index_.try_emplace(key, static_cast<int>(values_.size()));
    if (fresh) values_.push_back(x);
    return it->second;
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::unordered_map<long long, int> index_;
  std::vector<double> values_;
};

/// sin(m pi x) and m pi cos(m pi x) for every coordinate and mode.
void sine_tables(const std::vector<double>& xs, const std::vector<int>& modes, Eigen::MatrixXd& s,
                 Eigen::MatrixXd& ds) {
  s.resize(xs.size(), modes.size());
  ds.resize(xs.size(), modes.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t a = 0; a < modes.size(); ++a) {
      const double w = modes[a] * pi;
      s(i, a) = std::sin(w * xs[i]);
      ds(i, a) = w * std::cos(w * xs[i]);
    }
}

}  // namespace

std::string_view target_name(TargetKind kind) { return kind == TargetKind::One ? "one" : "bubble"; }

TargetKind parse_target(std::string_view name) {
  if (name == "one" || name == "1" || name == "One") return TargetKind::One;
  if (name == "bubble" || name == "Bubble") return TargetKind::Bubble;
  throw std::invalid_argument("unknown target '" + std::string(name) + "'");
}

double target_value(TargetKind kind, const std::array<double, 3>& x) {
  if (kind == TargetKind::One) return 1.0;
  return x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
}

double target_coefficient(TargetKind kind, int m, int n) {
  if (m % 2 == 0 || n % 2 == 0) return 0.0;
  if (kind == TargetKind::One) return 16.0 / (m * n * pi * pi);
  return 64.0 / (std::pow(pi, 6) * std::pow(double(m), 3) * std::pow(double(n), 3));
}

std::pair<double, double> mode_solution(double beta, double lambda, double d) {
  const double y = d / (1.0 + beta * lambda * lambda);
  return {-beta * lambda * y, y};
}

double SineSeries::value(double x1, double x2) const {
  double v = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double si = std::sin(modes[i] * pi * x1);
    for (std::size_t j = 0; j < modes.size(); ++j) v += coeff(i, j) * si * std::sin(modes[j] * pi * x2);
  }
  return v;
}

std::array<double, 2> SineSeries::gradient(double x1, double x2) const {
  std::array<double, 2> g{0.0, 0.0};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double wi = modes[i] * pi;
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const double wj = modes[j] * pi;
      g[0] += coeff(i, j) * wi * std::cos(wi * x1) * std::sin(wj * x2);
      g[1] += coeff(i, j) * std::sin(wi * x1) * wj * std::cos(wj * x2);
    }
  }
  return g;
}

double SineSeries::l2_norm_sq() const { return 0.25 * coeff.squaredNorm(); }

double SineSeries::h1_semi_sq() const {
  double s = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = 0; j < modes.size(); ++j)
      s += pi * pi * (double(modes[i]) * modes[i] + double(modes[j]) * modes[j]) * coeff(i, j) * coeff(i, j);
  return 0.25 * s;
}

ExactSolution exact_solution(double beta, TargetKind yd, int n_max) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (n_max < 1) throw std::invalid_argument("truncation must be positive");
  ExactSolution e;
  e.truncation = n_max;
  const std::vector<int> modes = odd_modes(n_max);
  const int n = static_cast<int>(modes.size());
  e.p.modes = e.y.modes = modes;
  e.p.coeff.resize(n, n);
  e.y.coeff.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double lam = pi * pi * (double(modes[i]) * modes[i] + double(modes[j]) * modes[j]);
      const auto [p, y] = mode_solution(beta, lam, target_coefficient(yd, modes[i], modes[j]));
      e.p.coeff(i, j) = p;
      e.y.coeff(i, j) = y;
    }
  return e;
}

ExactSolution exact_solution_adaptive(double beta, TargetKind yd, double tol, int cap) {
  int n = 16;
  ExactSolution coarse = exact_solution(beta, yd, n);
  NormSums prev = norm_sums(coarse);
  while (true) {
    const int next = std::min(2 * n, cap);
    ExactSolution fine = exact_solution(beta, yd, next);
    const NormSums cur = norm_sums(fine);
    double tail = 0.0;
    for (auto [a, b] : {std::pair{prev.p_l2, cur.p_l2}, std::pair{prev.p_h1, cur.p_h1}, std::pair{prev.y_l2, cur.y_l2},
                        std::pair{prev.y_h1, cur.y_h1}})
      if (b > 0.0) tail = std::max(tail, (b - a) / b);
    fine.tail_estimate = tail;
    fine.tail_ok = tail <= tol;
    if (fine.tail_ok || next >= cap) return fine;
    n = next;
    prev = cur;
  }
}

ErrorNorms error_norms(const MeshLevel& mesh, const Vector& p_h, const Vector& y_h, const ExactSolution& exact) {
  if (mesh.domain != DomainKind::UnitSquare) throw std::invalid_argument("error_norms: exact series live on the unit square");
  if (p_h.size() != mesh.dof_count() || y_h.size() != mesh.dof_count())
    throw std::invalid_argument("error_norms: vector length does not match the mesh");
  if (exact.tail_estimate > 1e-6)
    throw std::runtime_error("error_norms: series truncation " + std::to_string(exact.truncation) +
                             " leaves a relative tail of " + std::to_string(exact.tail_estimate));

  const SimplexRule rule = simplex_rule(2, 4);
  const int nq = static_cast<int>(rule.weights.size());
  CoordinateIndex xi, yi;
  std::vector<int> ix(mesh.cell_count() * nq), iy(mesh.cell_count() * nq);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const Cell& cell = mesh.cells[c];
    const auto& x0 = mesh.vertices[cell[0]].coords;
    const auto& x1 = mesh.vertices[cell[1]].coords;
    const auto& x2 = mesh.vertices[cell[2]].coords;
    for (int q = 0; q < nq; ++q) {
      const double s = rule.points[q][0], t = rule.points[q][1];
      ix[c * nq + q] = xi.insert(x0[0] + s * (x1[0] - x0[0]) + t * (x2[0] - x0[0]));
      iy[c * nq + q] = yi.insert(x0[1] + s * (x1[1] - x0[1]) + t * (x2[1] - x0[1]));
    }
  }
  Eigen::MatrixXd sx, dsx, sy, dsy;
  sine_tables(xi.values(), exact.p.modes, sx, dsx);
  sine_tables(yi.values(), exact.p.modes, sy, dsy);
  auto grid = [&](const SineSeries& s, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) -> Eigen::MatrixXd {
    if (s.modes != exact.p.modes) throw std::invalid_argument("error_norms: series use different modes");
    return a * (s.coeff * b.transpose());
  };
  const Eigen::MatrixXd pv = grid(exact.p, sx, sy), pdx = grid(exact.p, dsx, sy), pdy = grid(exact.p, sx, dsy);
  const Eigen::MatrixXd yv = grid(exact.y, sx, sy), ydx = grid(exact.y, dsx, sy), ydy = grid(exact.y, sx, dsy);

  auto nodal = [&](const Vector& v, int vertex) {
    const int i = mesh.interior_index[vertex];
    return i >= 0 ? v[i] : 0.0;
  };
  double ep_l2 = 0.0, ep_h1 = 0.0, ey_l2 = 0.0, ey_h1 = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const Cell& cell = mesh.cells[c];
    const CellGeometry geo = cell_geometry(mesh, c);
    std::array<double, 3> pn{}, yn{};
    double gp[2] = {0.0, 0.0}, gy[2] = {0.0, 0.0};
    for (int a = 0; a < 3; ++a) {
      pn[a] = nodal(p_h, cell[a]);
      yn[a] = nodal(y_h, cell[a]);
      for (int r = 0; r < 2; ++r) {
        gp[r] += pn[a] * geo.grad[a][r];
        gy[r] += yn[a] * geo.grad[a][r];
      }
    }
    const double scale = 2.0 * geo.volume;  // reference area 1/2
    for (int q = 0; q < nq; ++q) {
      const double s = rule.points[q][0], t = rule.points[q][1];
      const double w = rule.weights[q] * scale;
      const int a = ix[c * nq + q], b = iy[c * nq + q];
      const double ph = (1.0 - s - t) * pn[0] + s * pn[1] + t * pn[2];
      const double yh = (1.0 - s - t) * yn[0] + s * yn[1] + t * yn[2];
      ep_l2 += w * std::pow(pv(a, b) - ph, 2);
      ey_l2 += w * std::pow(yv(a, b) - yh, 2);
      ep_h1 += w * (std::pow(pdx(a, b) - gp[0], 2) + std::pow(pdy(a, b) - gp[1], 2));
      ey_h1 += w * (std::pow(ydx(a, b) - gy[0], 2) + std::pow(ydy(a, b) - gy[1], 2));
    }
  }
  ErrorNorms r;
  r.abs_L2_p = std::sqrt(ep_l2);
  r.abs_H1_p = std::sqrt(ep_h1);
  r.abs_L2_y = std::sqrt(ey_l2);
  r.abs_H1_y = std::sqrt(ey_h1);
  r.norm_L2_p = std::sqrt(exact.p.l2_norm_sq());
  r.norm_H1_p = std::sqrt(exact.p.h1_semi_sq());
  r.norm_L2_y = std::sqrt(exact.y.l2_norm_sq());
  r.norm_H1_y = std::sqrt(exact.y.h1_semi_sq());
  r.rel_L2_p = r.abs_L2_p / r.norm_L2_p;
  r.rel_H1_p = r.abs_H1_p / r.norm_H1_p;
  r.rel_L2_y = r.abs_L2_y / r.norm_L2_y;
  r.rel_H1_y = r.abs_H1_y / r.norm_H1_y;
  return r;
}

ControlErrors control_error(const ErrorNorms& p_errors, double beta) {
  const double s = 1.0 / beta;
  return {(s * p_errors.abs_H1_p) / (s * p_errors.norm_H1_p), (s * p_errors.abs_L2_p) / (s * p_errors.norm_L2_p)};
}

std::vector<BlockVector> balanced_rhs(const Hierarchy& h, double beta, const ScalarField& yd) {
  std::vector<BlockVector> rhs;
  const double scale = -std::pow(beta, 0.25);
  for (std::size_t k = 0; k < h.meshes.size(); ++k) {
    const Vector load = assemble_load(h.meshes[k], yd);
    const double w = h.ops[k].metric.weight;
    rhs.push_back(BlockVector::from_parts(scale * load / w, Vector::Zero(load.size()), static_cast<int>(k)));
  }
  return rhs;
}

OriginalSolution solve_original(const SaddleMultigrid& mg, TargetKind yd) {
  const double beta = mg.config().beta;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<BlockVector> rhs =
      balanced_rhs(mg.hierarchy(), beta, [yd](const std::array<double, 3>& x) { return target_value(yd, x); });
  OriginalSolution out;
  out.fmg = mg.full_multigrid(rhs);
  const BlockVector& u = out.fmg.solutions.back();
  out.p_bar = std::pow(beta, 0.25) * u.p();
  out.y_bar = std::pow(beta, -0.25) * u.y();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace kktmg
