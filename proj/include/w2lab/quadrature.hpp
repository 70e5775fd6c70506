#pragma once

#include <cstddef>
#include <vector>

namespace w2lab {

/// Nodes and weights for E g(G), G ~ N(0,1): E g(G) ~= sum_j weight[j] * g(node[j]).
/// Built from the n-point Gauss-Hermite rule (weight e^{-x^2}), rescaled to the
/// standard normal. Weights sum to 1 up to rounding.
struct NormalQuadrature {
  std::vector<double> node;
  std::vector<double> weight;
  std::size_t size() const noexcept { return node.size(); }
};

/// Gauss-Hermite rule for the weight e^{-x^2} (physicists' convention).
/// Golub-Welsch starting nodes polished by Newton on the Hermite-function recurrence.
void gauss_hermite(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

/// Cached standard-normal rule with n nodes.
const NormalQuadrature& normal_quadrature(std::size_t n);

/// Gauss-Legendre rule on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

/// Node count used by every Gaussian-weighted integral in the library.
inline constexpr std::size_t kQuadratureNodes = 200;

}  // namespace w2lab
