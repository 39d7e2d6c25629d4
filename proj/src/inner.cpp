#include "kktmg/inner.hpp"

#include <cmath>
#include <stdexcept>

#include "kktmg/random.hpp"

namespace kktmg {

ReactionDiffusionHierarchy::ReactionDiffusionHierarchy(std::shared_ptr<const Hierarchy> hierarchy, double beta,
                                                       InnerOptions options)
    : hierarchy_(std::move(hierarchy)), beta_(beta), options_(options) {
  if (!hierarchy_) throw std::invalid_argument("ReactionDiffusionHierarchy: null hierarchy");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (options_.nu < 1) throw std::invalid_argument("inner nu must be at least 1");
  omega_ = options_.damping > 0.0 ? options_.damping : (hierarchy_->dim() == 2 ? 2.0 / 3.0 : 4.0 / 7.0);
  const double sb = std::sqrt(beta);
  levels_.resize(hierarchy_->ops.size());
  factors_.resize(levels_.size());
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    const LevelOperators& op = hierarchy_->ops[k];
    Level& lv = levels_[k];
    lv.G = sb * op.A + op.M;
    lv.G.makeCompressed();
    lv.inv_diag = lv.G.diagonal().cwiseInverse();
    if ((k == 0 || options_.exact) && op.dofs() > 0) {
      factors_[k] = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
      factors_[k]->compute(Eigen::SparseMatrix<double>(lv.G));
      if (factors_[k]->info() != Eigen::Success) throw std::runtime_error("G is not positive definite");
    }
  }
}

Vector ReactionDiffusionHierarchy::exact_solve(int level, const Vector& b) const {
  if (b.size() == 0) return b;
  return factors_[level]->solve(b);
}

void ReactionDiffusionHierarchy::vcycle(int level, const Vector& b, Vector& x) const {
  if (level == 0) {
    x = exact_solve(0, b);
    return;
  }
  const Level& lv = levels_[level];
  const LevelOperators& op = hierarchy_->ops[level];
  for (int s = 0; s < options_.nu; ++s) x += omega_ * lv.inv_diag.cwiseProduct(b - lv.G * x);
  const Vector coarse_b = op.PT * (b - lv.G * x);
  Vector e = Vector::Zero(coarse_b.size());
  vcycle(level - 1, coarse_b, e);
  x += op.P * e;
  for (int s = 0; s < options_.nu; ++s) x += omega_ * lv.inv_diag.cwiseProduct(b - lv.G * x);
}

Vector ReactionDiffusionHierarchy::apply_cycle(int level, const Vector& b) const {
  if (level < 0 || level > max_level()) throw std::out_of_range("apply_cycle: level out of range");
  if (options_.exact) return exact_solve(level, b);
  Vector x = Vector::Zero(b.size());
  vcycle(level, b, x);
  return x;
}

Vector ReactionDiffusionHierarchy::apply_Linv(int level, const Vector& rhs) const {
  if (level < 0 || level > max_level()) throw std::out_of_range("apply_Linv: level out of range");
  return apply_cycle(level, hierarchy_->ops[level].metric.weight * rhs);
}

BlockVector ReactionDiffusionHierarchy::apply_Cinv(const BlockVector& u) const {
  return BlockVector::from_parts(apply_Linv(u.level, u.p()), apply_Linv(u.level, u.y()), u.level);
}

BlockVector ReactionDiffusionHierarchy::apply_C(const BlockVector& u) const {
  const SparseMatrix& G = levels_.at(u.level).G;
  const double w = hierarchy_->ops[u.level].metric.weight;
  return BlockVector::from_parts(G * u.p() / w, G * u.y() / w, u.level);
}

ContractionEstimate ReactionDiffusionHierarchy::estimate_cycle_contraction(int level, double tol, int max_iters,
                                                                           unsigned seed) const {
  if (level < 0 || level > max_level()) throw std::out_of_range("estimate_cycle_contraction: level out of range");
  ContractionEstimate est;
  const SparseMatrix& G = levels_[level].G;
  if (level == 0 || options_.exact || G.rows() == 0) return est;
  std::mt19937_64 rng(seed);
  Vector v = random_vector(G.rows(), rng);
  auto g_norm = [&](const Vector& x) { return std::sqrt(x.dot(G * x)); };
  v /= g_norm(v);
  double prev = 0.0;
  int stable = 0;
  est.converged = false;
  for (int it = 1; it <= max_iters; ++it) {
    Vector e = v - apply_cycle(level, G * v);
    const double rho = g_norm(e);
    est.value = rho;
    est.iterations = it;
    if (rho == 0.0) {
      est.converged = true;
      break;
    }
    stable = std::abs(rho - prev) < tol * rho ? stable + 1 : 0;
    if (stable >= 3) {
      est.converged = true;
      break;
    }
    prev = rho;
    v = e / rho;
  }
  return est;
}

}  // namespace kktmg
