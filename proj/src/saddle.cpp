#include "kktmg/saddle.hpp"

#include <cmath>
#include <stdexcept>

namespace kktmg {

namespace {

using Triplet = Eigen::Triplet<double, int>;

void append_block(std::vector<Triplet>& out, const SparseMatrix& m, int row0, int col0, double scale) {
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) out.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

Eigen::SparseMatrix<double> to_col_major(const SparseMatrix& m) {
  Eigen::SparseMatrix<double> c = m;
  c.makeCompressed();
  return c;
}

}  // namespace

BlockVector BlockVector::from_parts(const Vector& p, const Vector& y, int lvl) {
  if (p.size() != y.size()) throw std::invalid_argument("BlockVector: p and y differ in length");
  Vector data(p.size() + y.size());
  data << p, y;
  return BlockVector(std::move(data), lvl);
}

SaddleOperator::SaddleOperator(const LevelOperators& ops, double beta)
    : ops_(&ops), beta_(beta), sqrt_beta_(std::sqrt(beta)) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const int n = ops.dofs();
  std::vector<Triplet> t;
  t.reserve(2 * (ops.A.nonZeros() + ops.M.nonZeros()));
  append_block(t, ops.A, 0, 0, sqrt_beta_);
  append_block(t, ops.M, 0, n, -1.0);
  append_block(t, ops.M, n, 0, -1.0);
  append_block(t, ops.A, n, n, -sqrt_beta_);
  K_.resize(2 * n, 2 * n);
  K_.setFromTriplets(t.begin(), t.end());
  K_.makeCompressed();
  G_ = sqrt_beta_ * ops.A + ops.M;
  G_.makeCompressed();
}

BlockVector SaddleOperator::apply_B(const BlockVector& u) const {
  if (u.dofs() != dofs()) throw std::invalid_argument("apply_B: level mismatch");
  return BlockVector(Vector(K_ * u.data / ops_->metric.weight), u.level);
}

double SaddleOperator::form(const BlockVector& u, const BlockVector& v) const {
  const SparseMatrix& A = ops_->A;
  const SparseMatrix& M = ops_->M;
  return sqrt_beta_ * v.p().dot(A * u.p()) - v.p().dot(M * u.y()) - v.y().dot(M * u.p()) -
         sqrt_beta_ * v.y().dot(A * u.y());
}

double SaddleOperator::metric_dot(const BlockVector& u, const BlockVector& v) const {
  return ops_->metric.dot(u.data, v.data);
}

double SaddleOperator::h1beta_sq(const Vector& v) const {
  return v.dot(ops_->M * v) + sqrt_beta_ * v.dot(ops_->A * v);
}

std::pair<BlockVector, double> inf_sup_witness(const SaddleOperator& saddle, const BlockVector& u) {
  BlockVector w = BlockVector::from_parts(u.p() - u.y(), -u.y() - u.p(), u.level);
  const double norm_w = std::sqrt(saddle.pair_norm_sq(w));
  if (!(norm_w > 0.0)) throw std::invalid_argument("inf_sup_witness: u must be nonzero");
  return {std::move(w), saddle.form(u, w) / norm_w};
}

MeshNorms::MeshNorms(const SaddleOperator& saddle) : saddle_(&saddle) {
  if (saddle.dofs() == 0) return;
  g_factor_.compute(to_col_major(saddle.G()));
  if (g_factor_.info() != Eigen::Success) throw std::runtime_error("MeshNorms: G is not positive definite");
  k_factor_.compute(to_col_major(saddle.K()));
  if (k_factor_.info() != Eigen::Success) throw std::runtime_error("MeshNorms: K factorization failed");
}

double MeshNorms::norm_0k(const BlockVector& u) const { return std::sqrt(saddle_->metric_dot(u, u)); }

double MeshNorms::norm_1k(const BlockVector& u) const {
  if (u.data.size() == 0) return 0.0;
  const Vector ku = saddle_->apply_K(u.data);
  return std::sqrt(std::max(0.0, ku.dot(solve_Ghat(ku))));
}

Vector MeshNorms::solve_Ghat(const Vector& b) const {
  const int n = saddle_->dofs();
  Vector x(b.size());
  if (n == 0) return x;
  x.head(n) = g_factor_.solve(b.head(n));
  x.tail(n) = g_factor_.solve(b.tail(n));
  return x;
}

Vector MeshNorms::apply_Ghat(const Vector& u) const {
  const int n = saddle_->dofs();
  Vector x(u.size());
  if (n == 0) return x;
  x.head(n) = saddle_->G() * u.head(n);
  x.tail(n) = saddle_->G() * u.tail(n);
  return x;
}

Vector MeshNorms::apply_S(const Vector& u) const {
  if (u.size() == 0) return u;
  return saddle_->apply_K(solve_Ghat(saddle_->apply_K(u)));
}

Vector MeshNorms::solve_K(const Vector& b) const {
  if (b.size() == 0) return b;
  return k_factor_.solve(b);
}

}  // namespace kktmg
