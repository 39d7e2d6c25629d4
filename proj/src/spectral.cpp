#include "kktmg/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "kktmg/random.hpp"

namespace kktmg {

BlockVector apply_E(const SaddleMultigrid& mg, CycleKind kind, const BlockVector& u, int m1, int m2) {
  return mg.cycle(kind, BlockVector(u.dofs(), u.level), u, m1, m2);
}

Eigen::MatrixXd dense_E(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2) {
  const int n = 2 * mg.saddle(level).dofs();
  Eigen::MatrixXd E(n, n);
  BlockVector e(n / 2, level);
  for (int j = 0; j < n; ++j) {
    e.data.setZero();
    e.data[j] = 1.0;
    E.col(j) = apply_E(mg, kind, e, m1, m2).data;
  }
  return E;
}

Eigen::MatrixXd dense_S(const MeshNorms& norms) {
  const int n = 2 * norms.saddle().dofs();
  Eigen::MatrixXd S(n, n);
  Vector e = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    S.col(j) = norms.apply_S(e);
    e[j] = 0.0;
  }
  return 0.5 * (S + S.transpose());
}

double operator_norm_dense(const Eigen::MatrixXd& E, const Eigen::MatrixXd& S) {
  if (E.size() == 0) return 0.0;
  const Eigen::MatrixXd ese = E.transpose() * S * E;
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (ese + ese.transpose()), S,
                                                                     Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("operator_norm_dense: eigensolver failed");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

PowerResult operator_norm_power(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2,
                                const MeshNorms& norms, const PowerOptions& options) {
  PowerResult res;
  const int n = mg.saddle(level).dofs();
  if (level == 0 || n == 0) return res;
  const SaddleOperator& s = mg.saddle(level);
  const int size = 2 * n;
  const int steps = std::min(options.max_iters, size);
  // S-orthonormal Krylov basis of E^* E and its image under S
  std::vector<Vector> Q, SQ;
  Vector alpha = Vector::Zero(steps), beta = Vector::Zero(steps);
  std::mt19937_64 rng(options.seed);
  Vector q = random_vector(size, rng);
  Vector sq = norms.apply_S(q);
  double qn = std::sqrt(q.dot(sq));
  q /= qn;
  sq /= qn;
  res.converged = false;
  int stable = 0;
  double prev = 0.0;
  for (int j = 0; j < steps; ++j) {
    Q.push_back(q);
    SQ.push_back(sq);
    // z = E^* E q with E^* = K^{-1} Ghat E' Ghat^{-1} K
    const BlockVector w = apply_E(mg, kind, BlockVector(q, level), m1, m2);
    const Vector g = norms.solve_Ghat(s.apply_K(w.data));
    const BlockVector eg = apply_E(mg, kind, BlockVector(g, level), m2, m1);
    Vector z = norms.solve_K(norms.apply_Ghat(eg.data));
    alpha[j] = z.dot(sq);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) z -= SQ[i].dot(z) * Q[i];

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(j + 1, j + 1);
    for (int i = 0; i <= j; ++i) {
      T(i, i) = alpha[i];
      if (i < j) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    const double top =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double est = std::sqrt(std::max(0.0, top));
    res.norm = est;
    res.iterations = j + 1;
    res.history.push_back(est);
    if (est == 0.0) {
      res.converged = true;
      break;
    }
    stable = std::abs(est - prev) <= options.tol * est ? stable + 1 : 0;
    prev = est;
    if (stable >= 3) {
      res.converged = true;
      break;
    }
    const Vector sz = norms.apply_S(z);
    const double b = std::sqrt(std::max(0.0, z.dot(sz)));
    if (b <= 1e-13 * std::max(std::abs(alpha[j]), 1e-300)) {
      // invariant subspace: the Ritz value is exact
      res.converged = true;
      break;
    }
    beta[j] = b;
    q = z / b;
    sq = sz / b;
  }
  if (res.iterations == size) res.converged = true;
  return res;
}

double time_cycle(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2, unsigned seed) {
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(seed);
  const BlockVector f(random_vector(2 * mg.saddle(level).dofs(), rng), level);
  BlockVector u(f.dofs(), level);
  u = mg.cycle(kind, f, u, m1, m2);
  std::vector<double> t;
  for (int r = 0; r < 3; ++r) {
    const auto t0 = clock::now();
    u = mg.cycle(kind, f, u, m1, m2);
    t.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[1];
}

ContractionEntry measure_contraction(const SaddleMultigrid& mg, CycleKind kind, int level, int m1, int m2,
                                     const MeasureOptions& options) {
  ContractionEntry entry;
  entry.level = level;
  const DampingEntry& d = mg.damping().at(level);
  entry.est_min = d.est_min;
  entry.est_max = d.est_max;
  entry.lambda = d.lambda;
  const int n = mg.saddle(level).dofs();
  if (level == 0 || n == 0) {
    entry.converged = true;
  } else {
    const MeshNorms norms(mg.saddle(level));
    if (n <= options.dense_threshold) {
      entry.dense = true;
      entry.norm_Ek = operator_norm_dense(dense_E(mg, kind, level, m1, m2), dense_S(norms));
      entry.converged = true;
    } else {
      const PowerResult pr = operator_norm_power(mg, kind, level, m1, m2, norms, options.power);
      entry.norm_Ek = pr.norm;
      entry.iterations = pr.iterations;
      entry.converged = pr.converged;
    }
  }
  if (options.timing) entry.seconds_per_cycle = time_cycle(mg, kind, level, m1, m2);
  return entry;
}

namespace {

template <typename Fn>
void run_parallel(int count, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<ContractionReport> sweep(const SweepSpec& spec) {
  std::vector<ContractionReport> reports;
  if (spec.levels.empty() || spec.domains.empty() || spec.betas.empty() || spec.smoothing.empty()) return reports;
  const int top = *std::max_element(spec.levels.begin(), spec.levels.end());

  std::vector<std::shared_ptr<const Hierarchy>> hierarchies(spec.domains.size());
  std::vector<std::string> hierarchy_errors(spec.domains.size());
  run_parallel(static_cast<int>(spec.domains.size()), spec.jobs, [&](int i) {
    try {
      hierarchies[i] = build_fe_hierarchy(spec.domains[i], top);
    } catch (const std::exception& e) {
      hierarchy_errors[i] = e.what();
    }
  });

  // damping depends on (domain, beta) only
  const int nb = static_cast<int>(spec.betas.size());
  std::vector<std::unique_ptr<SaddleMultigrid>> base(spec.domains.size() * nb);
  std::vector<std::string> base_errors(base.size());
  run_parallel(static_cast<int>(base.size()), spec.jobs, [&](int i) {
    const std::size_t di = i / nb;
    if (!hierarchies[di]) {
      base_errors[i] = hierarchy_errors[di];
      return;
    }
    try {
      CycleConfig cfg = spec.base;
      cfg.beta = spec.betas[i % nb];
      cfg.cycle = spec.cycle;
      base[i] = std::make_unique<SaddleMultigrid>(hierarchies[di], cfg);
    } catch (const std::exception& e) {
      base_errors[i] = e.what();
    }
  });

  const int ns = static_cast<int>(spec.smoothing.size());
  reports.resize(base.size() * ns);
  run_parallel(static_cast<int>(reports.size()), spec.jobs, [&](int i) {
    const int bi = i / ns;
    const auto [m1, m2] = spec.smoothing[i % ns];
    ContractionReport& rep = reports[i];
    rep.domain = std::string(domain_name(spec.domains[bi / nb]));
    rep.beta = spec.betas[bi % nb];
    rep.cycle = spec.cycle;
    rep.m1 = m1;
    rep.m2 = m2;
    rep.seed = spec.measure.power.seed;
    for (int level : spec.levels) {
      ContractionEntry entry;
      entry.level = level;
      if (!base[bi]) {
        entry.error = base_errors[bi];
      } else {
        try {
          if (level > base[bi]->max_level()) throw std::out_of_range("level beyond hierarchy");
          entry = measure_contraction(*base[bi], spec.cycle, level, m1, m2, spec.measure);
        } catch (const std::exception& e) {
          entry.error = e.what();
        }
      }
      rep.entries.push_back(std::move(entry));
    }
  });
  return reports;
}

void write_csv_header(std::ostream& os) { os << "domain,beta,cycle,m1,m2,level,norm_Ek,converged,seconds_per_cycle\n"; }

void write_csv(const std::vector<ContractionReport>& reports, std::ostream& os) {
  const auto precision = os.precision(17);
  write_csv_header(os);
  for (const ContractionReport& r : reports)
    for (const ContractionEntry& e : r.entries) {
      os << r.domain << ',' << r.beta << ',' << cycle_name(r.cycle) << ',' << r.m1 << ',' << r.m2 << ',' << e.level
         << ',';
      if (e.error.empty())
        os << e.norm_Ek << ',' << (e.converged ? "true" : "false") << ',' << e.seconds_per_cycle << '\n';
      else
        os << "nan,false,nan\n";
    }
  os.precision(precision);
}

}  // namespace kktmg
