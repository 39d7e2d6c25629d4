#pragma once

#include <array>
#include <vector>

namespace kktmg {

/// Quadrature on the reference simplex with vertices 0, e_1, ..., e_dim.
/// Points are barycentric-free reference coordinates; weights sum to the
/// reference volume (1/2 in 2D, 1/6 in 3D).
struct SimplexRule {
  int dim = 2;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed (Duffy) tensor Gauss rule exact for polynomials of total
/// degree <= `degree` on the reference simplex.
SimplexRule simplex_rule(int dim, int degree);

}  // namespace kktmg
