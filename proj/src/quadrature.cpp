#include "w2lab/quadrature.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "w2lab/errors.hpp"

namespace w2lab {

void gauss_hermite(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n == 0) throw InvalidArgument("gauss_hermite: n must be positive");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const std::size_t half = (n + 1) / 2;
  const double dn = static_cast<double>(n);
  // Starting points: eigenvalues of the Jacobi matrix (Golub-Welsch), descending.
  std::vector<double> start(n, 0.0);
  if (n > 1) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n - 1));
    for (std::size_t j = 1; j < n; ++j) off(static_cast<Eigen::Index>(j - 1)) = std::sqrt(static_cast<double>(j) / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    for (std::size_t j = 0; j < n; ++j) start[j] = solver.eigenvalues()(static_cast<Eigen::Index>(n - 1 - j));
  }
  for (std::size_t i = 0; i < half; ++i) {
    double z = start[i];
    double pp = 0.0, last_step = 0.0;
    bool converged = false;
    for (int iter = 0; iter < 20; ++iter) {
      // Hermite functions (polynomial times e^{-z^2/2}) stay bounded for large n.
      double p1 = pim4 * std::exp(-0.5 * z * z), p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double dj = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / dj) * p2 - std::sqrt((dj - 1.0) / dj) * p3;
      }
      pp = std::sqrt(2.0 * dn) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      last_step = std::abs(z - z1);
      if (last_step <= 4e-16 * std::max(1.0, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged && last_step > 1e-12 * std::max(1.0, std::abs(z))) throw ConvergenceError("gauss_hermite: Newton iteration did not converge", 0.0);
    nodes[i] = z;
    nodes[n - 1 - i] = -z;
    weights[i] = 2.0 * std::exp(-z * z) / (pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

const NormalQuadrature& normal_quadrature(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<NormalQuadrature>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    std::vector<double> x, w;
    gauss_hermite(n, x, w);
    auto rule = std::make_unique<NormalQuadrature>();
    rule->node.resize(n);
    rule->weight.resize(n);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    // Ascending order is convenient for tail handling downstream.
    for (std::size_t j = 0; j < n; ++j) {
      rule->node[j] = std::numbers::sqrt2 * x[n - 1 - j];
      rule->weight[j] = w[n - 1 - j] * inv_sqrt_pi;
    }
    double total = 0.0;
    for (double w : rule->weight) total += w;
    if (std::abs(total - 1.0) > 1e-12) throw ConvergenceError("normal_quadrature: weights do not sum to 1", std::abs(total - 1.0));
    slot = std::move(rule);
  }
  return *slot;
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n == 0) throw InvalidArgument("gauss_legendre: n must be positive");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const std::size_t half = (n + 1) / 2;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double dj = static_cast<double>(j);
        p1 = ((2.0 * dj - 1.0) * z * p2 - (dj - 1.0) * p3) / dj;
      }
      pp = dn * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

}  // namespace w2lab
