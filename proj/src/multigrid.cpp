#include "kktmg/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "kktmg/random.hpp"

namespace kktmg {

namespace {

std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> factor_K(const SaddleOperator& s) {
  auto lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  Eigen::SparseMatrix<double> K = s.K();
  K.makeCompressed();
  lu->compute(K);
  if (lu->info() != Eigen::Success)
    throw std::runtime_error("saddle matrix factorization failed on level " + std::to_string(s.level()));
  return lu;
}

std::vector<SaddleOperator> make_saddles(const Hierarchy& h, double beta) {
  std::vector<SaddleOperator> s;
  s.reserve(h.ops.size());
  for (const LevelOperators& op : h.ops) s.emplace_back(op, beta);
  return s;
}

}  // namespace

std::string_view cycle_name(CycleKind kind) {
  switch (kind) {
    case CycleKind::W: return "w";
    case CycleKind::V: return "v";
    case CycleKind::TwoGrid: return "two-grid";
    case CycleKind::FMG: return "fmg";
  }
  return "?";
}

CycleKind parse_cycle(std::string_view name) {
  if (name == "w" || name == "W") return CycleKind::W;
  if (name == "v" || name == "V") return CycleKind::V;
  if (name == "two-grid" || name == "two_grid" || name == "twogrid") return CycleKind::TwoGrid;
  if (name == "fmg" || name == "FMG") return CycleKind::FMG;
  throw std::invalid_argument("unknown cycle '" + std::string(name) + "'");
}

LanczosResult lanczos_extremes(const std::function<Vector(const Vector&)>& op, int n, int steps, unsigned seed) {
  LanczosResult res;
  if (n == 0) return res;
  steps = std::min(steps, n);
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd Q(n, steps);
  Vector alpha = Vector::Zero(steps), beta = Vector::Zero(steps);
  Vector q = random_vector(n, rng);
  q.normalize();
  int m = 0;
  for (int j = 0; j < steps; ++j) {
    Q.col(j) = q;
    Vector w = op(q);
    alpha[j] = q.dot(w);
    // two passes of classical Gram-Schmidt against the whole basis
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    m = j + 1;
    if (j + 1 == steps) break;
    const double b = w.norm();
    const double scale = std::max(std::abs(alpha[j]), 1e-300);
    if (b > 1e-10 * scale) {
      beta[j] = b;
      q = w / b;
      continue;
    }
    if (res.restarts == 3) break;
    ++res.restarts;
    beta[j] = 0.0;
    q = random_vector(n, rng);
    for (int pass = 0; pass < 2; ++pass) q -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * q);
    if (q.norm() < 1e-12) break;
    q.normalize();
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    T(j, j) = alpha[j];
    if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta[j];
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  res.min = es.eigenvalues().minCoeff();
  res.max = es.eigenvalues().maxCoeff();
  res.steps = m;
  return res;
}

DampingTable build_damping(const std::vector<SaddleOperator>& saddles, const ReactionDiffusionHierarchy& inner,
                           const CycleConfig& config) {
  DampingTable table;
  table.levels.resize(saddles.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < saddles.size(); ++k) {
    const SaddleOperator& s = saddles[k];
    DampingEntry& e = table.levels[k];
    e.level = static_cast<int>(k);
    e.sigma = s.conditioning();
    e.regime = e.sigma < 1.0 ? Regime::WellConditioned : Regime::IllConditioned;
    const int lvl = e.level;
    auto op = [&](const Vector& x) {
      const BlockVector bx = s.apply_B(BlockVector(x, lvl));
      return s.apply_B(inner.apply_Cinv(bx)).data;
    };
    const LanczosResult lz = lanczos_extremes(op, 2 * s.dofs(), config.lanczos_steps, config.seed + 7919u * lvl);
    e.est_min = lz.min;
    e.est_max = lz.max;
    if (k >= 1) worst = std::max(worst, e.est_max / (1.0 + e.sigma));
  }
  table.c_dagger = config.c_dagger > 0.0 ? config.c_dagger : 1.1 * worst;
  if (!(table.c_dagger > 0.0)) {
    // only level 0 exists; use its own bound so the table stays well defined
    table.c_dagger = 1.1 * table.levels.front().est_max / (1.0 + table.levels.front().sigma);
  }
  for (DampingEntry& e : table.levels) {
    if (e.est_max <= 0.0) {
      e.lambda = 1.0;
      continue;
    }
    e.lambda = e.regime == Regime::WellConditioned ? 2.0 / (e.est_min + e.est_max)
                                                   : 1.0 / (table.c_dagger * (1.0 + e.sigma));
  }
  return table;
}

SaddleMultigrid::SaddleMultigrid(std::shared_ptr<const Hierarchy> hierarchy, CycleConfig config)
    : hierarchy_(std::move(hierarchy)),
      config_(config),
      inner_(hierarchy_, config.beta, config.inner),
      saddles_(make_saddles(*hierarchy_, config.beta)) {
  damping_ = build_damping(saddles_, inner_, config_);
  direct_.resize(saddles_.size());
  for (std::size_t k = 0; k < saddles_.size(); ++k) {
    const bool needed = k == 0 || (config_.cycle == CycleKind::TwoGrid && k + 1 < saddles_.size());
    if (needed && saddles_[k].dofs() > 0) direct_[k] = factor_K(saddles_[k]);
  }
}

SaddleMultigrid::SaddleMultigrid(std::shared_ptr<const Hierarchy> hierarchy, CycleConfig config, DampingTable damping)
    : hierarchy_(std::move(hierarchy)),
      config_(config),
      inner_(hierarchy_, config.beta, config.inner),
      saddles_(make_saddles(*hierarchy_, config.beta)),
      damping_(std::move(damping)) {
  if (damping_.levels.size() != saddles_.size()) throw std::invalid_argument("damping table does not match hierarchy");
  direct_.resize(saddles_.size());
  for (std::size_t k = 0; k < saddles_.size(); ++k) {
    const bool needed = k == 0 || (config_.cycle == CycleKind::TwoGrid && k + 1 < saddles_.size());
    if (needed && saddles_[k].dofs() > 0) direct_[k] = factor_K(saddles_[k]);
  }
}

BlockVector SaddleMultigrid::smooth_pre(const BlockVector& u, const BlockVector& f, double lambda) const {
  const SaddleOperator& s = saddles_.at(u.level);
  const BlockVector r(f.data - s.apply_B(u).data, u.level);
  return BlockVector(u.data + lambda * inner_.apply_Cinv(s.apply_B(r)).data, u.level);
}

BlockVector SaddleMultigrid::smooth_post(const BlockVector& u, const BlockVector& f, double lambda) const {
  const SaddleOperator& s = saddles_.at(u.level);
  const BlockVector r(f.data - s.apply_B(u).data, u.level);
  return BlockVector(u.data + lambda * s.apply_B(inner_.apply_Cinv(r)).data, u.level);
}

BlockVector SaddleMultigrid::restrict_to_coarse(const BlockVector& u) const {
  const int k = u.level;
  if (k < 1) throw std::invalid_argument("restrict_to_coarse: level 0 has no coarser level");
  const LevelOperators& op = hierarchy_->ops[k];
  const double ratio = op.metric.weight / hierarchy_->ops[k - 1].metric.weight;
  return BlockVector::from_parts(ratio * (op.PT * u.p()), ratio * (op.PT * u.y()), k - 1);
}

BlockVector SaddleMultigrid::prolongate(const BlockVector& u) const {
  const int k = u.level + 1;
  if (k > max_level()) throw std::invalid_argument("prolongate: no finer level");
  const LevelOperators& op = hierarchy_->ops[k];
  return BlockVector::from_parts(op.P * u.p(), op.P * u.y(), k);
}

BlockVector SaddleMultigrid::direct_solve(const BlockVector& f) const {
  const int k = f.level;
  const SaddleOperator& s = saddles_.at(k);
  if (s.dofs() == 0) return f;
  const Vector rhs = hierarchy_->ops[k].metric.weight * f.data;
  if (direct_[k]) return BlockVector(Vector(direct_[k]->solve(rhs)), k);
  const auto lu = factor_K(s);
  return BlockVector(Vector(lu->solve(rhs)), k);
}

BlockVector SaddleMultigrid::cycle(const BlockVector& f, const BlockVector& guess) const {
  return cycle(config_.cycle, f, guess, config_.m1, config_.m2);
}

BlockVector SaddleMultigrid::cycle(const BlockVector& f, const BlockVector& guess, int m1, int m2) const {
  return cycle(config_.cycle, f, guess, m1, m2);
}

BlockVector SaddleMultigrid::cycle(CycleKind kind, const BlockVector& f, const BlockVector& guess, int m1,
                                   int m2) const {
  if (f.level != guess.level || f.dofs() != guess.dofs()) throw std::invalid_argument("cycle: level mismatch");
  if (f.level < 0 || f.level > max_level()) throw std::out_of_range("cycle: level out of range");
  if (m1 < 0 || m2 < 0) throw std::invalid_argument("cycle: negative smoothing count");
  if (kind == CycleKind::FMG) kind = config_.fmg_cycle;
  return cycle_impl(kind, f, guess, m1, m2);
}

BlockVector SaddleMultigrid::cycle_impl(CycleKind kind, const BlockVector& f, const BlockVector& guess, int m1,
                                        int m2) const {
  const int k = f.level;
  if (k == 0) return direct_solve(f);
  const double lambda = damping_.at(k).lambda;
  BlockVector u = guess;
  for (int j = 0; j < m1; ++j) u = smooth_pre(u, f, lambda);
  const BlockVector r(f.data - saddles_[k].apply_B(u).data, k);
  const BlockVector rc = restrict_to_coarse(r);
  BlockVector correction;
  const BlockVector zero(rc.dofs(), k - 1);
  switch (kind) {
    case CycleKind::TwoGrid:
      correction = direct_solve(rc);
      break;
    case CycleKind::V:
      correction = cycle_impl(kind, rc, zero, m1, m2);
      break;
    default: {
      const BlockVector first = cycle_impl(kind, rc, zero, m1, m2);
      correction = cycle_impl(kind, rc, first, m1, m2);
    }
  }
  u.data += prolongate(correction).data;
  for (int j = 0; j < m2; ++j) u = smooth_post(u, f, lambda);
  return u;
}

FmgResult SaddleMultigrid::full_multigrid(const std::vector<BlockVector>& rhs) const {
  if (rhs.empty() || static_cast<int>(rhs.size()) > max_level() + 1)
    throw std::invalid_argument("full_multigrid: need right-hand sides for levels 0..K");
  FmgResult out;
  out.solutions.push_back(direct_solve(rhs[0]));
  out.iterations.push_back(0);
  out.residual_history.emplace_back();
  const CycleKind kind = config_.cycle == CycleKind::FMG ? config_.fmg_cycle : config_.cycle;
  for (std::size_t k = 1; k < rhs.size(); ++k) {
    const SaddleOperator& s = saddles_[k];
    const Vector F = hierarchy_->ops[k].metric.weight * rhs[k].data;
    const double fnorm = F.norm();
    BlockVector u = prolongate(out.solutions.back());
    std::vector<double> history;
    int it = 0;
    if (fnorm == 0.0) {
      u.data.setZero();
    } else {
      double rel = (F - s.apply_K(u.data)).norm() / fnorm;
      history.push_back(rel);
      while (rel > config_.fmg_tolerance) {
        if (it == config_.fmg_max_iterations)
          throw FmgError("full multigrid did not reach the residual tolerance on level " + std::to_string(k), int(k),
                         history);
        u = cycle_impl(kind, rhs[k], u, config_.m1, config_.m2);
        ++it;
        rel = (F - s.apply_K(u.data)).norm() / fnorm;
        history.push_back(rel);
      }
    }
    out.solutions.push_back(std::move(u));
    out.iterations.push_back(it);
    out.residual_history.push_back(std::move(history));
  }
  return out;
}

}  // namespace kktmg
