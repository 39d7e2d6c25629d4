#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "doctest.h"
#include "kktmg/quadrature.hpp"
#include "kktmg/reference.hpp"
#include "support.hpp"

using namespace kktmg;

namespace {

constexpr double pi = std::numbers::pi;

/// Tensor Gauss-Legendre integral over the unit square.
template <class F>
double integrate_square(F&& f, int n = 40) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += w[i] * w[j] * f(x[i], x[j]);
  return s;
}

ExactSolution single_mode(double beta, double c) {
  ExactSolution e = exact_solution(beta, TargetKind::Bubble, 1);
  e.p.coeff(0, 0) = -c;
  e.y.coeff(0, 0) = c;
  return e;
}

}  // namespace

TEST_CASE("target parsing") {
  CHECK(parse_target("one") == TargetKind::One);
  CHECK(parse_target("1") == TargetKind::One);
  CHECK(parse_target("bubble") == TargetKind::Bubble);
  CHECK_THROWS_AS(parse_target("two"), std::invalid_argument);
  CHECK(target_value(TargetKind::Bubble, {0.5, 0.5, 0.0}) == doctest::Approx(1.0 / 16.0));
  CHECK(target_value(TargetKind::One, {0.1, 0.7, 0.0}) == 1.0);
}

TEST_CASE("per-mode closed form solves the decoupled 2x2 systems") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> logb(-8.0, 2.0);
  std::uniform_int_distribution<int> mode(1, 40);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double beta = std::pow(10.0, logb(rng));
    const int m = mode(rng), n = mode(rng);
    const double lambda = pi * pi * (m * m + n * n);
    const double d = coef(rng);
    // lambda p = y - d,  lambda y = -p / beta
    Eigen::Matrix2d sys;
    sys << lambda, -1.0, 1.0 / beta, lambda;
    const Eigen::Vector2d sol = sys.fullPivLu().solve(Eigen::Vector2d(-d, 0.0));
    const auto [p, y] = mode_solution(beta, lambda, d);
    CHECK(p == doctest::Approx(sol[0]).epsilon(1e-14));
    CHECK(y == doctest::Approx(sol[1]).epsilon(1e-14));
  }
}

TEST_CASE("single-mode target with beta = 1") {
  const double lambda = 2.0 * pi * pi;
  const auto [p, y] = mode_solution(1.0, lambda, 1.0);
  const double denom = 1.0 + 4.0 * std::pow(pi, 4);
  CHECK(y == doctest::Approx(1.0 / denom).epsilon(1e-15));
  CHECK(p == doctest::Approx(-2.0 * pi * pi / denom).epsilon(1e-15));
}

TEST_CASE("the state vanishes as beta grows") {
  const ExactSolution e = exact_solution(1e12, TargetKind::One, 15);
  const ExactSolution ref = exact_solution(1e-2, TargetKind::One, 15);
  CHECK(e.y.coeff.cwiseAbs().maxCoeff() < 1e-12 * ref.y.coeff.cwiseAbs().maxCoeff());
}

TEST_CASE("sine coefficients of the targets match quadrature") {
  for (TargetKind t : {TargetKind::One, TargetKind::Bubble})
    for (int m = 1; m <= 6; ++m)
      for (int n = 1; n <= 6; ++n) {
        const double q = 4.0 * integrate_square([&](double x, double y) {
          return target_value(t, {x, y, 0.0}) * std::sin(m * pi * x) * std::sin(n * pi * y);
        });
        CHECK(std::abs(target_coefficient(t, m, n) - q) < 1e-13);
      }
}

TEST_CASE("series values, gradients and closed-form norms") {
  std::mt19937_64 rng(43);
  SineSeries s;
  s.modes = {1, 3, 5};
  s.coeff = Eigen::MatrixXd(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.coeff(i, j) = std::uniform_real_distribution<double>(-1, 1)(rng);
  const double l2 = integrate_square([&](double x, double y) { return std::pow(s.value(x, y), 2); });
  const double h1 = integrate_square([&](double x, double y) {
    const auto g = s.gradient(x, y);
    return g[0] * g[0] + g[1] * g[1];
  });
  CHECK(s.l2_norm_sq() == doctest::Approx(l2).epsilon(1e-12));
  CHECK(s.h1_semi_sq() == doctest::Approx(h1).epsilon(1e-12));
  const double eps = 1e-6;
  const auto g = s.gradient(0.3, 0.6);
  CHECK(g[0] == doctest::Approx((s.value(0.3 + eps, 0.6) - s.value(0.3 - eps, 0.6)) / (2 * eps)).epsilon(1e-7));
  CHECK(g[1] == doctest::Approx((s.value(0.3, 0.6 + eps) - s.value(0.3, 0.6 - eps)) / (2 * eps)).epsilon(1e-7));
}

TEST_CASE("adaptive truncation") {
  const ExactSolution bubble = exact_solution_adaptive(1e-2, TargetKind::Bubble);
  CHECK(bubble.tail_ok);
  CHECK(bubble.tail_estimate <= 1e-10);
  CHECK(bubble.truncation < 4096);
  const ExactSolution capped = exact_solution_adaptive(1e-2, TargetKind::One, 1e-10, 64);
  CHECK(capped.truncation == 64);
  CHECK_FALSE(capped.tail_ok);
  CHECK(capped.tail_estimate > 1e-10);
  CHECK_THROWS_AS(exact_solution(0.0, TargetKind::One, 8), std::invalid_argument);
}

TEST_CASE("error norms") {
  const auto hier = build_fe_hierarchy(DomainKind::UnitSquare, 6);
  SUBCASE("zero against zero") {
    ExactSolution zero = exact_solution(1.0, TargetKind::One, 3);
    zero.p.coeff.setZero();
    zero.y.coeff.setZero();
    const MeshLevel& m = hier->meshes[2];
    const ErrorNorms e = error_norms(m, Vector::Zero(m.dof_count()), Vector::Zero(m.dof_count()), zero);
    CHECK(e.abs_L2_p == 0.0);
    CHECK(e.abs_H1_p == 0.0);
    CHECK(e.abs_L2_y == 0.0);
    CHECK(e.abs_H1_y == 0.0);
  }
  SUBCASE("norms of the exact solution use the closed forms") {
    const ExactSolution ex = exact_solution(1e-2, TargetKind::Bubble, 31);
    const MeshLevel& m = hier->meshes[1];
    const ErrorNorms e = error_norms(m, Vector::Zero(m.dof_count()), Vector::Zero(m.dof_count()), ex);
    CHECK(e.norm_L2_p == doctest::Approx(std::sqrt(ex.p.l2_norm_sq())));
    // against the zero function the error is the norm itself, up to quadrature error
    CHECK(e.rel_L2_y == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e.rel_H1_p == doctest::Approx(1.0).epsilon(1e-2));
  }
  SUBCASE("interpolation errors converge at the optimal rates") {
    const ExactSolution ex = single_mode(1.0, 0.5);
    double prev_l2 = 0.0, prev_h1 = 0.0;
    for (int k = 3; k <= 6; ++k) {
      const MeshLevel& m = hier->meshes[k];
      const Vector yi = interpolate(m, [&](const std::array<double, 3>& x) { return ex.y.value(x[0], x[1]); });
      const ErrorNorms e = error_norms(m, -yi, yi, ex);
      CHECK(e.rel_L2_p == doctest::Approx(e.rel_L2_y).epsilon(1e-12));
      if (k > 3) {
        CHECK(prev_l2 / e.rel_L2_y == doctest::Approx(4.0).epsilon(0.1));
        CHECK(prev_h1 / e.rel_H1_y == doctest::Approx(2.0).epsilon(0.05));
      }
      prev_l2 = e.rel_L2_y;
      prev_h1 = e.rel_H1_y;
    }
  }
  SUBCASE("rejections") {
    const auto l = build_fe_hierarchy(DomainKind::LShape, 1);
    const ExactSolution ex = exact_solution(1.0, TargetKind::Bubble, 3);
    const int n = l->meshes[1].dof_count();
    CHECK_THROWS_AS(error_norms(l->meshes[1], Vector::Zero(n), Vector::Zero(n), ex), std::invalid_argument);
    ExactSolution rough = ex;
    rough.tail_estimate = 1e-3;
    const MeshLevel& m = hier->meshes[1];
    CHECK_THROWS_AS(error_norms(m, Vector::Zero(m.dof_count()), Vector::Zero(m.dof_count()), rough),
                    std::runtime_error);
    CHECK_THROWS_AS(error_norms(m, Vector::Zero(3), Vector::Zero(3), ex), std::invalid_argument);
  }
}

TEST_CASE("control errors equal the relative adjoint-state errors") {
  ErrorNorms e;
  e.abs_H1_p = 0.3;
  e.norm_H1_p = 7.0;
  e.abs_L2_p = 0.02;
  e.norm_L2_p = 1.5;
  for (double beta : {1e-2, 1e-4, 1e-6}) {
    const ControlErrors c = control_error(e, beta);
    CHECK(c.rel_H1 == doctest::Approx(0.3 / 7.0).epsilon(1e-15));
    CHECK(c.rel_L2 == doctest::Approx(0.02 / 1.5).epsilon(1e-15));
  }
}

TEST_CASE("balanced right-hand side and the solution of the original system") {
  const double beta = 1e-4;
  const int K = 4;
  const auto hier = build_fe_hierarchy(DomainKind::UnitSquare, K);
  const ScalarField bubble = [](const std::array<double, 3>& x) { return target_value(TargetKind::Bubble, x); };
  const auto rhs = balanced_rhs(*hier, beta, bubble);
  REQUIRE(rhs.size() == static_cast<std::size_t>(K + 1));
  for (int k = 0; k <= K; ++k) {
    const Vector load = assemble_load(hier->meshes[k], bubble);
    CHECK(rhs[k].y().cwiseAbs().maxCoeff() == 0.0);
    CHECK((rhs[k].p() + std::pow(beta, 0.25) * load / hier->ops[k].metric.weight).cwiseAbs().maxCoeff() < 1e-14);
  }

  CycleConfig c;
  c.beta = beta;
  c.m1 = c.m2 = 2;
  const SaddleMultigrid mg(hier, c);
  const OriginalSolution sol = solve_original(mg, TargetKind::Bubble);

  // A p - M y = -b,  M p + beta A y = 0, solved directly
  const LevelOperators& op = hier->ops[K];
  const int n = op.dofs();
  std::vector<Eigen::Triplet<double>> t;
  auto add = [&](const SparseMatrix& m, int r0, int c0, double s) {
    for (int i = 0; i < m.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) t.emplace_back(r0 + it.row(), c0 + it.col(), s * it.value());
  };
  add(op.A, 0, 0, 1.0);
  add(op.M, 0, n, -1.0);
  add(op.M, n, 0, 1.0);
  add(op.A, n, n, beta);
  Eigen::SparseMatrix<double> sys(2 * n, 2 * n);
  sys.setFromTriplets(t.begin(), t.end());
  sys.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(sys);
  Vector b = Vector::Zero(2 * n);
  b.head(n) = -assemble_load(hier->meshes[K], bubble);
  const Vector x = lu.solve(b);
  CHECK((sol.p_bar - x.head(n)).norm() <= 1e-6 * x.head(n).norm());
  CHECK((sol.y_bar - x.tail(n)).norm() <= 1e-6 * x.tail(n).norm());
  CHECK(sol.fmg.iterations.size() == static_cast<std::size_t>(K + 1));
  CHECK(sol.seconds > 0.0);
}
