#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kktmg {

enum class DomainKind { UnitSquare, Pentagon, UnitCube, LShape };

int domain_dimension(DomainKind kind);
double domain_volume(DomainKind kind);
std::string_view domain_name(DomainKind kind);
/// Accepts the CLI spellings (unit-square, pentagon, unit-cube, l-shape).
DomainKind parse_domain(std::string_view name);

/// Exact membership test for the open domain. Coordinates produced by the
/// refinement are dyadic, so plain floating point comparisons are exact.
bool is_strictly_inside(DomainKind kind, const std::array<double, 3>& x);

struct Vertex {
  std::array<double, 3> coords{};
  bool is_interior = false;
};

/// A fine vertex either coincides with coarse vertex `a` (b == -1) or is the
/// midpoint of the coarse edge (a, b).
struct ParentLink {
  int a = -1;
  int b = -1;
  bool is_midpoint() const { return b >= 0; }
};

/// Simplex given by dim+1 vertex indices; unused trailing slots are -1.
using Cell = std::array<int, 4>;

class MeshLevel {
 public:
  DomainKind domain = DomainKind::UnitSquare;
  int dim = 2;
  int level = 0;
  double h = 0.0;
  std::vector<Vertex> vertices;
  // Cells keep the vertex order the refinement rule relies on (in 3D this is
  // the path order of the Kuhn simplices); use oriented_cell() when a
  // positively oriented ordering is needed.
  std::vector<Cell> cells;
  std::vector<int> interior_index;    // vertex -> dof, -1 on the boundary
  std::vector<int> interior_vertices; // dof -> vertex
  std::vector<ParentLink> parent;     // empty on level 0

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int cell_count() const { return static_cast<int>(cells.size()); }
  int dof_count() const { return static_cast<int>(interior_vertices.size()); }

  /// Signed volume of cell c in its stored vertex order.
  double signed_volume(int c) const;
  /// The cell with its last two vertices swapped if needed so that the
  /// signed volume is positive.
  Cell oriented_cell(int c) const;
  /// Minimum over cells of a normalized shape quality in (0, 1]
  /// (dim * inradius / circumradius).
  double min_quality() const;
  double total_volume() const;

  void rebuild_interior_index();
};

MeshLevel build_initial_mesh(DomainKind domain);
MeshLevel refine(const MeshLevel& coarse);
/// Level 0 ... max_level.
std::vector<MeshLevel> build_hierarchy(DomainKind domain, int max_level);

int interior_dof_count(const MeshLevel& mesh);

void write_mesh_json(const MeshLevel& mesh, std::ostream& os);

}  // namespace kktmg
