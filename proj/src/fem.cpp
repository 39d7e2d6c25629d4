#include "kktmg/fem.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "kktmg/quadrature.hpp"

namespace kktmg {

namespace {

using Triplet = Eigen::Triplet<double, int>;

template <typename Local>
SparseMatrix assemble_interior(const MeshLevel& mesh, Local local_entry) {
  const int n = mesh.dof_count();
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.cells.size() * (mesh.dim + 1) * (mesh.dim + 1));
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry geo = cell_geometry(mesh, c);
    const Cell& cell = mesh.cells[c];
    for (int a = 0; a <= mesh.dim; ++a) {
      const int i = mesh.interior_index[cell[a]];
      if (i < 0) continue;
      for (int b = a; b <= mesh.dim; ++b) {
        const int j = mesh.interior_index[cell[b]];
        if (j < 0) continue;
        const double v = local_entry(geo, a, b);
        triplets.emplace_back(i, j, v);
        if (i != j) triplets.emplace_back(j, i, v);
      }
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

double mass_entry(const CellGeometry& geo, int dim, int a, int b) {
  const double scale = geo.volume / ((dim + 1) * (dim + 2));
  return a == b ? 2.0 * scale : scale;
}

}  // namespace

CellGeometry cell_geometry(const MeshLevel& mesh, int c) {
  const int d = mesh.dim;
  const Cell& cell = mesh.cells[c];
  const auto& x0 = mesh.vertices[cell[0]].coords;
  Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < d; ++r) jac(r, i) = mesh.vertices[cell[i + 1]].coords[r] - x0[r];
  const double det = jac.topLeftCorner(d, d).determinant();
  const double ref_volume = d == 2 ? 0.5 : 1.0 / 6.0;
  if (!(std::abs(det) > 0.0)) throw AssemblyError("degenerate cell " + std::to_string(c));
  CellGeometry geo;
  geo.volume = std::abs(det) * ref_volume;
  const Eigen::MatrixXd inv = jac.topLeftCorner(d, d).inverse();
  // grad lambda_i (i >= 1) is row i-1 of J^{-1}
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < d; ++r) {
      geo.grad[i + 1][r] = inv(i, r);
      geo.grad[0][r] -= inv(i, r);
    }
  return geo;
}

SparseMatrix assemble_stiffness(const MeshLevel& mesh) {
  return assemble_interior(mesh, [&](const CellGeometry& geo, int a, int b) {
    double s = 0.0;
    for (int r = 0; r < mesh.dim; ++r) s += geo.grad[a][r] * geo.grad[b][r];
    return geo.volume * s;
  });
}

SparseMatrix assemble_mass(const MeshLevel& mesh) {
  return assemble_interior(mesh, [&](const CellGeometry& geo, int a, int b) { return mass_entry(geo, mesh.dim, a, b); });
}

SparseMatrix assemble_full_mass(const MeshLevel& mesh) {
  const int n = mesh.vertex_count();
  std::vector<Triplet> triplets;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry geo = cell_geometry(mesh, c);
    for (int a = 0; a <= mesh.dim; ++a)
      for (int b = 0; b <= mesh.dim; ++b)
        triplets.emplace_back(mesh.cells[c][a], mesh.cells[c][b], mass_entry(geo, mesh.dim, a, b));
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

LumpedMetric lumped_metric(const MeshLevel& mesh) { return {mesh.dof_count(), mesh.h * mesh.h}; }

SparseMatrix assemble_prolongation(const MeshLevel& fine, const MeshLevel& coarse) {
  if (fine.level != coarse.level + 1 || fine.domain != coarse.domain ||
      fine.parent.size() != fine.vertices.size())
    throw std::invalid_argument("assemble_prolongation: fine mesh is not a refinement of the coarse mesh");
  std::vector<Triplet> triplets;
  for (int i = 0; i < fine.dof_count(); ++i) {
    const ParentLink link = fine.parent[fine.interior_vertices[i]];
    if (link.a >= coarse.vertex_count() || link.b >= coarse.vertex_count())
      throw std::invalid_argument("assemble_prolongation: parent vertex out of range");
    if (!link.is_midpoint()) {
      const int j = coarse.interior_index[link.a];
      if (j < 0) throw std::invalid_argument("assemble_prolongation: interior vertex inherited from boundary");
      triplets.emplace_back(i, j, 1.0);
      continue;
    }
    for (int end : {link.a, link.b})
      if (const int j = coarse.interior_index[end]; j >= 0) triplets.emplace_back(i, j, 0.5);
  }
  SparseMatrix p(fine.dof_count(), coarse.dof_count());
  p.setFromTriplets(triplets.begin(), triplets.end());
  p.makeCompressed();
  return p;
}

Vector assemble_load(const MeshLevel& mesh, const ScalarField& f, int degree) {
  const SimplexRule rule = simplex_rule(mesh.dim, degree);
  const double ref_volume = mesh.dim == 2 ? 0.5 : 1.0 / 6.0;
  Vector load = Vector::Zero(mesh.dof_count());
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const Cell& cell = mesh.cells[c];
    const double vol = std::abs(mesh.signed_volume(c));
    const auto& x0 = mesh.vertices[cell[0]].coords;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      std::array<double, 4> lambda{};
      std::array<double, 3> x = x0;
      lambda[0] = 1.0;
      for (int i = 0; i < mesh.dim; ++i) {
        const double t = rule.points[q][i];
        lambda[i + 1] = t;
        lambda[0] -= t;
        for (int r = 0; r < mesh.dim; ++r) x[r] += t * (mesh.vertices[cell[i + 1]].coords[r] - x0[r]);
      }
      const double fw = f(x) * rule.weights[q] * vol / ref_volume;
      for (int a = 0; a <= mesh.dim; ++a)
        if (const int i = mesh.interior_index[cell[a]]; i >= 0) load[i] += fw * lambda[a];
    }
  }
  return load;
}

Vector interpolate(const MeshLevel& mesh, const ScalarField& f) {
  Vector v(mesh.dof_count());
  for (int i = 0; i < mesh.dof_count(); ++i) v[i] = f(mesh.vertices[mesh.interior_vertices[i]].coords);
  return v;
}

void write_triplets(const SparseMatrix& m, std::ostream& os) {
  const auto precision = os.precision(17);
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
  os.precision(precision);
}

std::vector<LevelOperators> assemble_levels(const std::vector<MeshLevel>& meshes) {
  std::vector<LevelOperators> ops(meshes.size());
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    LevelOperators& op = ops[k];
    op.level = meshes[k].level;
    op.h = meshes[k].h;
    op.A = assemble_stiffness(meshes[k]);
    op.M = assemble_mass(meshes[k]);
    op.metric = lumped_metric(meshes[k]);
    if (k > 0) {
      op.P = assemble_prolongation(meshes[k], meshes[k - 1]);
      op.PT = op.P.transpose();
    }
  }
  return ops;
}

std::shared_ptr<const Hierarchy> build_fe_hierarchy(DomainKind domain, int max_level) {
  auto h = std::make_shared<Hierarchy>();
  h->domain = domain;
  h->meshes = build_hierarchy(domain, max_level);
  h->ops = assemble_levels(h->meshes);
  return h;
}

}  // namespace kktmg
