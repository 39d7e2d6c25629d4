#include "kktmg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace kktmg {

int domain_dimension(DomainKind kind) { return kind == DomainKind::UnitCube ? 3 : 2; }

double domain_volume(DomainKind kind) {
  switch (kind) {
    case DomainKind::UnitSquare:
    case DomainKind::UnitCube:
      return 1.0;
    case DomainKind::Pentagon:
      return 0.875;
    case DomainKind::LShape:
      return 3.0;
  }
  return 0.0;
}

std::string_view domain_name(DomainKind kind) {
  switch (kind) {
    case DomainKind::UnitSquare:
      return "unit-square";
    case DomainKind::Pentagon:
      return "pentagon";
    case DomainKind::UnitCube:
      return "unit-cube";
    case DomainKind::LShape:
      return "l-shape";
  }
  return "unknown";
}

DomainKind parse_domain(std::string_view name) {
  if (name == "unit-square" || name == "unit_square" || name == "UnitSquare") return DomainKind::UnitSquare;
  if (name == "pentagon" || name == "Pentagon") return DomainKind::Pentagon;
  if (name == "unit-cube" || name == "unit_cube" || name == "UnitCube") return DomainKind::UnitCube;
  if (name == "l-shape" || name == "l_shape" || name == "LShape") return DomainKind::LShape;
  throw std::invalid_argument("unknown domain '" + std::string(name) + "'");
}

bool is_strictly_inside(DomainKind kind, const std::array<double, 3>& x) {
  switch (kind) {
    case DomainKind::UnitSquare:
      return x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0;
    case DomainKind::Pentagon:
      return x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0 && x[0] + x[1] < 1.5;
    case DomainKind::UnitCube:
      return x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0 && x[2] > 0.0 && x[2] < 1.0;
    case DomainKind::LShape:
      return x[0] > -1.0 && x[0] < 1.0 && x[1] > -1.0 && x[1] < 1.0 && !(x[0] >= 0.0 && x[1] <= 0.0);
  }
  return false;
}

namespace {

Eigen::Vector3d point(const MeshLevel& mesh, int v) {
  const auto& c = mesh.vertices[v].coords;
  return {c[0], c[1], c[2]};
}

double cell_quality(const MeshLevel& mesh, int c) {
  const Cell& cell = mesh.cells[c];
  if (mesh.dim == 2) {
    const Eigen::Vector3d a = point(mesh, cell[0]), b = point(mesh, cell[1]), d = point(mesh, cell[2]);
    const double la = (b - d).norm(), lb = (a - d).norm(), lc = (a - b).norm();
    const double area = std::abs(mesh.signed_volume(c));
    const double r_in = 2.0 * area / (la + lb + lc);
    const double r_circ = la * lb * lc / (4.0 * area);
    return 2.0 * r_in / r_circ;
  }
  const Eigen::Vector3d x0 = point(mesh, cell[0]);
  Eigen::Matrix3d edges;
  for (int i = 0; i < 3; ++i) edges.row(i) = (point(mesh, cell[i + 1]) - x0).transpose();
  const double vol = std::abs(edges.determinant()) / 6.0;
  // circumcenter c solves 2 e_i . c = |e_i|^2
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) rhs[i] = edges.row(i).squaredNorm();
  const Eigen::Vector3d center = (2.0 * edges).partialPivLu().solve(rhs);
  const double r_circ = center.norm();
  double faces = 0.0;
  static constexpr int face_ids[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  for (const auto& f : face_ids) {
    const Eigen::Vector3d p = point(mesh, cell[f[0]]);
    faces += 0.5 * (point(mesh, cell[f[1]]) - p).cross(point(mesh, cell[f[2]]) - p).norm();
  }
  const double r_in = 3.0 * vol / faces;
  return 3.0 * r_in / r_circ;
}

// Drops vertices not referenced by any cell and renumbers cells accordingly.
void compact_vertices(MeshLevel& mesh) {
  std::vector<int> used(mesh.vertices.size(), 0);
  for (const Cell& c : mesh.cells)
    for (int i = 0; i <= mesh.dim; ++i) used[c[i]] = 1;
  std::vector<int> renumber(mesh.vertices.size(), -1);
  std::vector<Vertex> kept;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (!used[v]) continue;
    renumber[v] = static_cast<int>(kept.size());
    kept.push_back(mesh.vertices[v]);
  }
  mesh.vertices = std::move(kept);
  for (Cell& c : mesh.cells)
    for (int i = 0; i <= mesh.dim; ++i) c[i] = renumber[c[i]];
}

// Right-diagonal triangulation of an nx-by-ny grid of squares with spacing h
// starting at (x0, y0); `keep(i, j)` selects the squares that are meshed.
template <typename Keep>
MeshLevel grid_triangulation(DomainKind kind, double x0, double y0, double h, int nx, int ny, Keep keep) {
  MeshLevel mesh;
  mesh.domain = kind;
  mesh.dim = 2;
  mesh.level = 0;
  mesh.h = h;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.vertices.push_back({{x0 + i * h, y0 + j * h, 0.0}, false});
  const auto id = [nx](int i, int j) { return i + j * (nx + 1); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!keep(i, j)) continue;
      mesh.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), -1});
      mesh.cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1), -1});
    }
  return mesh;
}

void finalize(MeshLevel& mesh) {
  for (Vertex& v : mesh.vertices) v.is_interior = is_strictly_inside(mesh.domain, v.coords);
  mesh.rebuild_interior_index();
}

}  // namespace

double MeshLevel::signed_volume(int c) const {
  const Cell& cell = cells[c];
  if (dim == 2) {
    const auto& a = vertices[cell[0]].coords;
    const auto& b = vertices[cell[1]].coords;
    const auto& d = vertices[cell[2]].coords;
    return 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
  }
  const Eigen::Vector3d x0 = point(*this, cell[0]);
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) m.col(i) = point(*this, cell[i + 1]) - x0;
  return m.determinant() / 6.0;
}

Cell MeshLevel::oriented_cell(int c) const {
  Cell cell = cells[c];
  if (signed_volume(c) < 0.0) std::swap(cell[dim - 1], cell[dim]);
  return cell;
}

double MeshLevel::min_quality() const {
  double q = 1.0;
  for (int c = 0; c < cell_count(); ++c) q = std::min(q, cell_quality(*this, c));
  return q;
}

double MeshLevel::total_volume() const {
  double vol = 0.0;
  for (int c = 0; c < cell_count(); ++c) vol += std::abs(signed_volume(c));
  return vol;
}

void MeshLevel::rebuild_interior_index() {
  interior_index.assign(vertices.size(), -1);
  interior_vertices.clear();
  for (int v = 0; v < vertex_count(); ++v) {
    if (!vertices[v].is_interior) continue;
    interior_index[v] = static_cast<int>(interior_vertices.size());
    interior_vertices.push_back(v);
  }
}

MeshLevel build_initial_mesh(DomainKind domain) {
  MeshLevel mesh;
  switch (domain) {
    case DomainKind::UnitSquare:
      mesh = grid_triangulation(domain, 0.0, 0.0, 0.5, 2, 2, [](int, int) { return true; });
      break;
    case DomainKind::Pentagon: {
      mesh = grid_triangulation(domain, 0.0, 0.0, 0.5, 2, 2, [](int i, int j) { return !(i == 1 && j == 1); });
      // The remaining part of the upper right square is the triangle below the cut x + y = 3/2.
      const int center = 4, right = 5, top = 7;
      mesh.cells.push_back({center, right, top, -1});
      compact_vertices(mesh);
      break;
    }
    case DomainKind::LShape:
      mesh = grid_triangulation(domain, -1.0, -1.0, 0.5, 4, 4, [](int i, int j) { return !(i >= 2 && j <= 1); });
      compact_vertices(mesh);
      break;
    case DomainKind::UnitCube: {
      mesh.domain = domain;
      mesh.dim = 3;
      mesh.level = 0;
      mesh.h = 1.0;
      for (int v = 0; v < 8; ++v) mesh.vertices.push_back({{double(v & 1), double((v >> 1) & 1), double((v >> 2) & 1)}, false});
      // Kuhn split: one tetrahedron per axis permutation, vertices in path order.
      std::array<int, 3> perm{0, 1, 2};
      do {
        int v = 0;
        Cell c{0, 0, 0, 0};
        for (int s = 0; s < 3; ++s) {
          v |= 1 << perm[s];
          c[s + 1] = v;
        }
        mesh.cells.push_back(c);
      } while (std::next_permutation(perm.begin(), perm.end()));
      break;
    }
  }
  finalize(mesh);
  return mesh;
}

MeshLevel refine(const MeshLevel& coarse) {
  MeshLevel fine;
  fine.domain = coarse.domain;
  fine.dim = coarse.dim;
  fine.level = coarse.level + 1;
  fine.h = coarse.h / 2.0;
  fine.vertices = coarse.vertices;
  fine.parent.resize(coarse.vertices.size());
  for (int v = 0; v < coarse.vertex_count(); ++v) fine.parent[v] = {v, -1};

  const auto nv = static_cast<std::int64_t>(coarse.vertices.size());
  std::unordered_map<std::int64_t, int> midpoints;
  const auto midpoint = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    const std::int64_t key = a * nv + b;
    if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
    Vertex m;
    for (int i = 0; i < 3; ++i) m.coords[i] = 0.5 * (coarse.vertices[a].coords[i] + coarse.vertices[b].coords[i]);
    const int id = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back(m);
    fine.parent.push_back({a, b});
    midpoints.emplace(key, id);
    return id;
  };

  fine.cells.reserve(coarse.cells.size() * (coarse.dim == 2 ? 4 : 8));
  for (const Cell& c : coarse.cells) {
    if (coarse.dim == 2) {
      const int x0 = c[0], x1 = c[1], x2 = c[2];
      const int m01 = midpoint(x0, x1), m02 = midpoint(x0, x2), m12 = midpoint(x1, x2);
      fine.cells.push_back({x0, m01, m02, -1});
      fine.cells.push_back({m01, x1, m12, -1});
      fine.cells.push_back({m02, m12, x2, -1});
      fine.cells.push_back({m01, m12, m02, -1});
    } else {
      // Bey's rule with the x02-x13 diagonal: maps Kuhn simplices in path
      // order to Kuhn simplices in path order.
      const int x0 = c[0], x1 = c[1], x2 = c[2], x3 = c[3];
      const int x01 = midpoint(x0, x1), x02 = midpoint(x0, x2), x03 = midpoint(x0, x3);
      const int x12 = midpoint(x1, x2), x13 = midpoint(x1, x3), x23 = midpoint(x2, x3);
      fine.cells.push_back({x0, x01, x02, x03});
      fine.cells.push_back({x01, x1, x12, x13});
      fine.cells.push_back({x02, x12, x2, x23});
      fine.cells.push_back({x03, x13, x23, x3});
      fine.cells.push_back({x01, x02, x03, x13});
      fine.cells.push_back({x01, x02, x12, x13});
      fine.cells.push_back({x02, x03, x13, x23});
      fine.cells.push_back({x02, x12, x13, x23});
    }
  }
  finalize(fine);
  return fine;
}

std::vector<MeshLevel> build_hierarchy(DomainKind domain, int max_level) {
  if (max_level < 0) throw std::invalid_argument("max_level must be non-negative");
  std::vector<MeshLevel> levels;
  levels.reserve(max_level + 1);
  levels.push_back(build_initial_mesh(domain));
  for (int k = 1; k <= max_level; ++k) levels.push_back(refine(levels.back()));
  return levels;
}

int interior_dof_count(const MeshLevel& mesh) { return mesh.dof_count(); }

void write_mesh_json(const MeshLevel& mesh, std::ostream& os) {
  nlohmann::json j;
  j["level"] = mesh.level;
  j["h"] = mesh.h;
  auto& verts = j["vertices"] = nlohmann::json::array();
  auto& interior = j["interior"] = nlohmann::json::array();
  for (const Vertex& v : mesh.vertices) {
    verts.push_back(std::vector<double>(v.coords.begin(), v.coords.begin() + mesh.dim));
    interior.push_back(v.is_interior);
  }
  auto& cells = j["cells"] = nlohmann::json::array();
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const Cell cell = mesh.oriented_cell(c);
    cells.push_back(std::vector<int>(cell.begin(), cell.begin() + mesh.dim + 1));
  }
  os << j.dump() << '\n';
}

}  // namespace kktmg
