#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kktmg/spectral.hpp"
#include "support.hpp"

using namespace kktmg;
using kktmg::test::random_block;

namespace {

CycleConfig config_for(double beta, CycleKind kind = CycleKind::W) {
  CycleConfig c;
  c.beta = beta;
  c.cycle = kind;
  return c;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("apply_E is linear, vanishes at zero and on level 0") {
  const auto hier = build_fe_hierarchy(DomainKind::LShape, 3);
  const SaddleMultigrid mg(hier, config_for(1e-4));
  std::mt19937_64 rng(31);
  for (int k = 0; k <= 3; ++k) {
    const int n = hier->ops[k].dofs();
    const BlockVector u = random_block(n, k, rng), v = random_block(n, k, rng);
    CHECK(apply_E(mg, CycleKind::W, BlockVector(n, k), 1, 1).data.cwiseAbs().maxCoeff() == 0.0);
    const Vector lhs = apply_E(mg, CycleKind::W, BlockVector(1.5 * u.data + v.data, k), 1, 1).data;
    const Vector rhs = 1.5 * apply_E(mg, CycleKind::W, u, 1, 1).data + apply_E(mg, CycleKind::W, v, 1, 1).data;
    const double scale = std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
    if (k == 0) {
      CHECK(lhs.cwiseAbs().maxCoeff() == 0.0);
    } else {
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
  }
  const MeshNorms norms(mg.saddle(0));
  CHECK(operator_norm_power(mg, CycleKind::W, 0, 1, 1, norms).norm == 0.0);
  CHECK(measure_contraction(mg, CycleKind::W, 0, 1, 1).norm_Ek == 0.0);
}

TEST_CASE("dense and power-iteration norms agree") {
  const auto hier = build_fe_hierarchy(DomainKind::UnitSquare, 3);
  for (double beta : {1e-2, 1e-6}) {
    const SaddleMultigrid mg(hier, config_for(beta));
    for (int k = 1; k <= 3; ++k)
      for (auto [m1, m2] : {std::pair{1, 1}, std::pair{2, 2}, std::pair{1, 2}}) {
        const MeshNorms norms(mg.saddle(k));
        const double dense = operator_norm_dense(dense_E(mg, CycleKind::W, k, m1, m2), dense_S(norms));
        PowerOptions tight;
        tight.tol = 1e-12;
        tight.max_iters = 3000;
        const PowerResult p = operator_norm_power(mg, CycleKind::W, k, m1, m2, norms, tight);
        CHECK(p.converged);
        CHECK(std::abs(p.norm - dense) <= 1e-6);
        CHECK(p.history.size() == static_cast<std::size_t>(p.iterations));
      }
  }
}

TEST_CASE("measure_contraction chooses the dense path below the threshold") {
  const auto hier = build_fe_hierarchy(DomainKind::UnitSquare, 3);
  const SaddleMultigrid mg(hier, config_for(1e-2));
  MeasureOptions o;
  o.timing = false;
  const ContractionEntry d = measure_contraction(mg, CycleKind::W, 3, 1, 1, o);
  CHECK(d.dense);
  CHECK(d.converged);
  CHECK(d.seconds_per_cycle == 0.0);
  o.dense_threshold = 0;
  const ContractionEntry p = measure_contraction(mg, CycleKind::W, 3, 1, 1, o);
  CHECK_FALSE(p.dense);
  CHECK(p.norm_Ek == doctest::Approx(d.norm_Ek).epsilon(1e-3));
  CHECK(p.lambda == mg.damping().at(3).lambda);
}

TEST_CASE("W-cycle and two-grid norms are comparable; adjoint pairs agree") {
  const auto hier = build_fe_hierarchy(DomainKind::UnitSquare, 3);
  for (double beta : {1e-2, 1e-6}) {
    const SaddleMultigrid mg(hier, config_for(beta));
    for (int k = 2; k <= 3; ++k) {
      const MeshNorms norms(mg.saddle(k));
      const Eigen::MatrixXd S = dense_S(norms);
      const double w = operator_norm_dense(dense_E(mg, CycleKind::W, k, 1, 1), S);
      const double tg = operator_norm_dense(dense_E(mg, CycleKind::TwoGrid, k, 1, 1), S);
      CHECK(w < 1.0);
      CHECK(w <= 2.0 * tg);
      CHECK(tg <= 2.0 * w);
      for (int m : {1, 2, 4}) {
        const double post = operator_norm_dense(dense_E(mg, CycleKind::TwoGrid, k, 0, m), S);
        const double pre = operator_norm_dense(dense_E(mg, CycleKind::TwoGrid, k, m, 0), S);
        CHECK(post < 1.0);
        CHECK(pre < 1.0);
        CHECK(post / pre == doctest::Approx(1.0).epsilon(0.5));
      }
    }
  }
}

TEST_CASE("sweep") {
  SweepSpec spec;
  spec.domains = {DomainKind::UnitSquare};
  spec.betas = {1e-2};
  spec.smoothing = {{1, 1}, {2, 2}, {4, 4}};
  spec.measure.timing = false;
  SUBCASE("an empty level list yields an empty report") { CHECK(sweep(spec).empty()); }
  SUBCASE("norms decay monotonically in m and every m = 1 cycle contracts") {
    spec.levels = {1, 2, 3, 4};
    spec.jobs = 3;
    const auto reports = sweep(spec);
    REQUIRE(reports.size() == 3u);
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
      CHECK(reports[0].entries[l].norm_Ek < 1.0);
      for (int i = 1; i < 3; ++i) CHECK(reports[i].entries[l].norm_Ek <= 1.05 * reports[i - 1].entries[l].norm_Ek);
    }
    // geometric decay at a well-conditioned level (sqrt(beta) h^-2 = 0.64 at level 1)
    const double r1 = reports[1].entries[0].norm_Ek / reports[0].entries[0].norm_Ek;
    const double r2 = reports[2].entries[0].norm_Ek / reports[1].entries[0].norm_Ek;
    CHECK(r1 < 0.8);
    CHECK(r2 <= r1 * r1 * 1.5);
  }
  SUBCASE("runs with equal seeds are identical") {
    spec.levels = {2, 3};
    std::ostringstream a, b;
    write_csv(sweep(spec), a);
    spec.jobs = 4;
    write_csv(sweep(spec), b);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("cycle time grows with the number of smoothing steps") {
  const auto hier = build_fe_hierarchy(DomainKind::UnitSquare, 5);
  const SaddleMultigrid mg(hier, config_for(1e-2));
  const double t1 = time_cycle(mg, CycleKind::W, 5, 1, 1);
  const double t4 = time_cycle(mg, CycleKind::W, 5, 4, 4);
  MESSAGE("seconds per W(1,1) and W(4,4) cycle at level 5: " << t1 << ", " << t4);
  CHECK(t1 > 0.0);
  CHECK(t4 / t1 > 2.0);
  CHECK(t4 / t1 < 5.0);
}

TEST_CASE("CSV layout") {
  ContractionReport r;
  r.domain = "unit-square";
  r.beta = 1e-4;
  r.cycle = CycleKind::V;
  r.m1 = 2;
  r.m2 = 3;
  ContractionEntry ok;
  ok.level = 2;
  ok.norm_Ek = 0.5;
  ok.converged = true;
  ok.seconds_per_cycle = 0.25;
  ContractionEntry bad;
  bad.level = 3;
  bad.error = "factorization failed";
  r.entries = {ok, bad};
  std::ostringstream os;
  write_csv({r}, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "domain,beta,cycle,m1,m2,level,norm_Ek,converged,seconds_per_cycle");
  std::getline(is, line);
  const auto row = split(line);
  REQUIRE(row.size() == 9u);
  CHECK(row[0] == "unit-square");
  CHECK(std::stod(row[1]) == 1e-4);
  CHECK(row[2] == "v");
  CHECK(row[3] == "2");
  CHECK(row[4] == "3");
  CHECK(row[5] == "2");
  CHECK(std::stod(row[6]) == 0.5);
  CHECK(row[7] == "true");
  std::getline(is, line);
  CHECK(line == "unit-square,0.0001,v,2,3,3,nan,false,nan");
  CHECK_FALSE(std::getline(is, line));
}
