#include "kktmg/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kktmg {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1, 1] -> [0, 1]
    nodes[i] = 0.5 * (1.0 - x);
    nodes[n - 1 - i] = 0.5 * (1.0 + x);
    weights[i] = weights[n - 1 - i] = 0.5 * w;
  }
}

SimplexRule simplex_rule(int dim, int degree) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("simplex_rule: dim must be 2 or 3");
  if (degree < 0) throw std::invalid_argument("simplex_rule: negative degree");
  // The Duffy Jacobian adds up to dim-1 powers of the collapsed variable.
  const int n = (degree + dim + 1) / 2;
  std::vector<double> t, w;
  gauss_legendre(n, t, w);
  SimplexRule rule;
  rule.dim = dim;
  if (dim == 2) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double u = t[a], v = t[b];
        rule.points.push_back({u, v * (1.0 - u), 0.0});
        rule.weights.push_back(w[a] * w[b] * (1.0 - u));
      }
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          const double u = t[a], v = t[b], s = t[c];
          rule.points.push_back({u, v * (1.0 - u), s * (1.0 - u) * (1.0 - v)});
          rule.weights.push_back(w[a] * w[b] * w[c] * (1.0 - u) * (1.0 - u) * (1.0 - v));
        }
  }
  return rule;
}

}  // namespace kktmg
