#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "kktmg/mesh.hpp"

using namespace kktmg;

namespace {

const DomainKind all_domains[] = {DomainKind::UnitSquare, DomainKind::Pentagon, DomainKind::UnitCube,
                                  DomainKind::LShape};

int levels_for(DomainKind d) { return d == DomainKind::UnitCube ? 2 : 3; }

/// Facet (sorted vertex indices) -> number of cells containing it.
std::map<std::vector<int>, int> facet_counts(const MeshLevel& m) {
  std::map<std::vector<int>, int> counts;
  for (const Cell& c : m.cells)
    for (int skip = 0; skip <= m.dim; ++skip) {
      std::vector<int> f;
      for (int i = 0; i <= m.dim; ++i)
        if (i != skip) f.push_back(c[i]);
      std::sort(f.begin(), f.end());
      ++counts[f];
    }
  return counts;
}

}  // namespace

TEST_CASE("parse_domain accepts the documented spellings") {
  CHECK(parse_domain("unit-square") == DomainKind::UnitSquare);
  CHECK(parse_domain("unit_square") == DomainKind::UnitSquare);
  CHECK(parse_domain("pentagon") == DomainKind::Pentagon);
  CHECK(parse_domain("unit-cube") == DomainKind::UnitCube);
  CHECK(parse_domain("l-shape") == DomainKind::LShape);
  CHECK(parse_domain("l_shape") == DomainKind::LShape);
  CHECK_THROWS_AS(parse_domain("disk"), std::invalid_argument);
  for (DomainKind d : all_domains) CHECK(parse_domain(domain_name(d)) == d);
}

TEST_CASE("initial meshes") {
  SUBCASE("unit square") {
    const MeshLevel m = build_initial_mesh(DomainKind::UnitSquare);
    CHECK(m.cell_count() == 8);
    CHECK(m.vertex_count() == 9);
    CHECK(m.dof_count() == 1);
    CHECK(m.h == doctest::Approx(0.5));
  }
  SUBCASE("unit cube") {
    const MeshLevel m = build_initial_mesh(DomainKind::UnitCube);
    CHECK(m.cell_count() == 6);
    CHECK(m.vertex_count() == 8);
    CHECK(m.dof_count() == 0);
  }
  SUBCASE("pentagon") {
    const MeshLevel m = build_initial_mesh(DomainKind::Pentagon);
    CHECK(m.cell_count() == 7);
    CHECK(m.vertex_count() == 8);
    CHECK(m.dof_count() == 1);
    CHECK(m.total_volume() == doctest::Approx(0.875).epsilon(1e-14));
  }
  SUBCASE("L-shape") {
    const MeshLevel m = build_initial_mesh(DomainKind::LShape);
    CHECK(m.dof_count() == 5);
    CHECK(m.total_volume() == doctest::Approx(3.0).epsilon(1e-14));
  }
}

TEST_CASE("one refinement") {
  const MeshLevel sq = refine(build_initial_mesh(DomainKind::UnitSquare));
  CHECK(sq.cell_count() == 32);
  CHECK(sq.vertex_count() == 25);
  CHECK(sq.dof_count() == 9);
  CHECK(sq.h == doctest::Approx(0.25));

  const MeshLevel cube = refine(build_initial_mesh(DomainKind::UnitCube));
  CHECK(cube.cell_count() == 48);
  CHECK(cube.vertex_count() == 27);
  CHECK(cube.dof_count() == 1);

  const MeshLevel l = refine(build_initial_mesh(DomainKind::LShape));
  int oracle = 0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      const double x = 0.25 * i, y = 0.25 * j;
      if (!(x >= 0.0 && y <= 0.0)) ++oracle;
    }
  CHECK(oracle == 33);
  CHECK(l.dof_count() == oracle);
}

TEST_CASE("interior dof counts follow the structured formulas") {
  const auto sq = build_hierarchy(DomainKind::UnitSquare, 5);
  for (int k = 0; k <= 5; ++k) {
    const int n = (1 << (k + 1)) - 1;
    CHECK(interior_dof_count(sq[k]) == n * n);
  }
  const auto cube = build_hierarchy(DomainKind::UnitCube, 3);
  for (int k = 0; k <= 3; ++k) {
    const int n = (1 << k) - 1;
    CHECK(interior_dof_count(cube[k]) == n * n * n);
  }
}

TEST_CASE("interior flags agree with the domain membership test") {
  for (DomainKind d : all_domains) {
    const auto ms = build_hierarchy(d, levels_for(d));
    for (const MeshLevel& m : ms)
      for (const Vertex& v : m.vertices) CHECK(v.is_interior == is_strictly_inside(d, v.coords));
  }
}

TEST_CASE("refinement halves h and conserves volume") {
  for (DomainKind d : all_domains) {
    const auto ms = build_hierarchy(d, levels_for(d));
    for (std::size_t k = 0; k < ms.size(); ++k) {
      CHECK(ms[k].level == static_cast<int>(k));
      CHECK(std::abs(ms[k].total_volume() - domain_volume(d)) <= 1e-12);
      if (k > 0) CHECK(ms[k].h == doctest::Approx(0.5 * ms[k - 1].h).epsilon(1e-15));
      CHECK(ms[k].cell_count() == ms[0].cell_count() * (1 << (ms[k].dim * static_cast<int>(k))));
    }
  }
}

TEST_CASE("cells are non-degenerate and oriented_cell is positive") {
  for (DomainKind d : all_domains) {
    const auto ms = build_hierarchy(d, levels_for(d));
    const MeshLevel& m = ms.back();
    for (int c = 0; c < m.cell_count(); ++c) {
      CHECK(std::abs(m.signed_volume(c)) > 0.0);
      MeshLevel copy;
      copy.dim = m.dim;
      copy.vertices = m.vertices;
      copy.cells = {m.oriented_cell(c)};
      CHECK(copy.signed_volume(0) > 0.0);
    }
  }
}

TEST_CASE("meshes are conforming") {
  for (DomainKind d : all_domains) {
    const auto ms = build_hierarchy(d, levels_for(d));
    for (const MeshLevel& m : ms) {
      for (const auto& [facet, count] : facet_counts(m)) {
        CHECK(count >= 1);
        CHECK(count <= 2);
        if (count == 1) {
          // A facet owned by one cell lies on the boundary.
          std::array<double, 3> centroid{};
          for (int v : facet) {
            CHECK_FALSE(m.vertices[v].is_interior);
            for (int i = 0; i < 3; ++i) centroid[i] += m.vertices[v].coords[i] / facet.size();
          }
          CHECK_FALSE(is_strictly_inside(d, centroid));
        }
      }
    }
  }
}

TEST_CASE("shape quality is preserved by refinement") {
  for (DomainKind d : all_domains) {
    const auto ms = build_hierarchy(d, levels_for(d));
    const double q0 = ms[0].min_quality();
    CHECK(q0 > 0.0);
    for (const MeshLevel& m : ms) CHECK(m.min_quality() >= q0 - 1e-12);
  }
}

TEST_CASE("parent links describe coincident vertices and edge midpoints") {
  for (DomainKind d : all_domains) {
    const auto ms = build_hierarchy(d, levels_for(d));
    CHECK(ms[0].parent.empty());
    for (std::size_t k = 1; k < ms.size(); ++k) {
      const MeshLevel& f = ms[k];
      const MeshLevel& c = ms[k - 1];
      REQUIRE(f.parent.size() == f.vertices.size());
      int coincident = 0;
      for (int v = 0; v < f.vertex_count(); ++v) {
        const ParentLink& link = f.parent[v];
        for (int i = 0; i < f.dim; ++i) {
          const double expect = link.is_midpoint()
                                    ? 0.5 * (c.vertices[link.a].coords[i] + c.vertices[link.b].coords[i])
                                    : c.vertices[link.a].coords[i];
          CHECK(f.vertices[v].coords[i] == expect);
        }
        if (!link.is_midpoint()) ++coincident;
      }
      CHECK(coincident == c.vertex_count());
    }
  }
}

TEST_CASE("mesh JSON dump") {
  const MeshLevel m = refine(build_initial_mesh(DomainKind::Pentagon));
  std::ostringstream os;
  write_mesh_json(m, os);
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j["level"] == 1);
  CHECK(j["h"].get<double>() == doctest::Approx(m.h));
  CHECK(j["vertices"].size() == static_cast<std::size_t>(m.vertex_count()));
  CHECK(j["cells"].size() == static_cast<std::size_t>(m.cell_count()));
  CHECK(j["vertices"][0].size() == 2u);
  CHECK(j["cells"][0].size() == 3u);
  int interior = 0;
  for (const auto& flag : j["interior"]) interior += flag.get<bool>() ? 1 : 0;
  CHECK(interior == m.dof_count());
}

TEST_CASE("build_hierarchy rejects negative levels") {
  CHECK_THROWS_AS(build_hierarchy(DomainKind::UnitSquare, -1), std::invalid_argument);
}
