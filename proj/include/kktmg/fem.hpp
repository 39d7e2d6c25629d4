#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "kktmg/mesh.hpp"

namespace kktmg {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using ScalarField = std::function<double(const std::array<double, 3>&)>;

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The mesh-dependent inner product (v, w)_k = h_k^2 sum_x v(x) w(x) over
/// interior vertices. The weight is h^2 in every dimension.
struct LumpedMetric {
  int n = 0;
  double weight = 0.0;

  double dot(const Vector& a, const Vector& b) const { return weight * a.dot(b); }
};

/// Stiffness matrix restricted to interior dofs.
SparseMatrix assemble_stiffness(const MeshLevel& mesh);
/// Consistent P1 mass matrix restricted to interior dofs.
SparseMatrix assemble_mass(const MeshLevel& mesh);
/// Consistent P1 mass matrix over all vertices (boundary included).
SparseMatrix assemble_full_mass(const MeshLevel& mesh);
LumpedMetric lumped_metric(const MeshLevel& mesh);

/// Natural injection V_{k-1} -> V_k in interior-dof coordinates.
SparseMatrix assemble_prolongation(const MeshLevel& fine, const MeshLevel& coarse);

/// (f, phi_i) for interior dofs, integrated per cell with a rule exact for
/// polynomial integrands of degree `degree`.
Vector assemble_load(const MeshLevel& mesh, const ScalarField& f, int degree = 5);

/// Nodal values of f at the interior vertices.
Vector interpolate(const MeshLevel& mesh, const ScalarField& f);

/// Gradients of the barycentric coordinates of cell c (rows) and its volume.
struct CellGeometry {
  std::array<std::array<double, 3>, 4> grad{};
  double volume = 0.0;
};
CellGeometry cell_geometry(const MeshLevel& mesh, int c);

/// 1-based coordinate triplets "i j value", one per line.
void write_triplets(const SparseMatrix& m, std::ostream& os);

/// Per-level finite element data shared by the solvers.
struct LevelOperators {
  int level = 0;
  double h = 0.0;
  SparseMatrix A;           // stiffness
  SparseMatrix M;           // consistent mass
  SparseMatrix P;           // prolongation from level-1 (empty on level 0)
  SparseMatrix PT;          // its transpose
  LumpedMetric metric;

  int dofs() const { return static_cast<int>(A.rows()); }
};

std::vector<LevelOperators> assemble_levels(const std::vector<MeshLevel>& meshes);

/// Mesh hierarchy together with its assembled operators. Immutable once built
/// and shared read-only by every solver component.
struct Hierarchy {
  DomainKind domain = DomainKind::UnitSquare;
  std::vector<MeshLevel> meshes;
  std::vector<LevelOperators> ops;

  int max_level() const { return static_cast<int>(meshes.size()) - 1; }
  int dim() const { return meshes.front().dim; }
};

std::shared_ptr<const Hierarchy> build_fe_hierarchy(DomainKind domain, int max_level);

}  // namespace kktmg
