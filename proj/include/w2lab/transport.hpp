#pragma once

// Wasserstein distances between uniform empirical measures: exact assignment,
// the monotone 1-d coupling, log-domain Sinkhorn, and projection lower bounds.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "w2lab/point_cloud.hpp"
#include "w2lab/rng.hpp"

namespace w2lab {

/// Compensated summation.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Uniform-weight point cloud.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(PointCloud points);
  static EmpiricalMeasure from_1d(std::span<const double> xs);

  const PointCloud& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return points_.dim(); }
  double weight() const noexcept { return 1.0 / static_cast<double>(points_.size()); }

 private:
  PointCloud points_;
};

struct PlanEntry {
  std::size_t source;
  std::size_t target;
  double mass;
};

/// Sparse coupling between a source and a target measure.
struct TransportPlan {
  std::vector<PlanEntry> entries;
  /// Set when the plan is a permutation (equal-size uniform measures).
  std::optional<std::vector<std::size_t>> permutation;
  /// sum of mass * ||x_i - y_j||^2
  double cost = 0.0;

  /// max over rows/columns of |marginal - prescribed uniform weight|
  double max_marginal_violation(std::size_t n_source, std::size_t n_target) const;
};

struct ExactTransport {
  double cost = 0.0;  // W2^2 between the empirical measures
  TransportPlan plan;
  double distance() const;
};

inline constexpr std::size_t kDefaultSolverCap = 5000;

/// Exact W2^2 between equal-size uniform measures via linear assignment.
/// Throws InvalidArgument on size or dimension mismatch, CapacityError above cap.
ExactTransport w2_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t cap = kDefaultSolverCap);

/// Exact W1 (Euclidean ground cost) between equal-size uniform measures; diagnostic only.
double w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t cap = kDefaultSolverCap);

/// W2 between two equal-length 1-d samples through the monotone (sorted) coupling.
double w2_quantile_1d(std::span<const double> xs, std::span<const double> ys);
/// Same, with inputs already sorted ascending.
double w2_sorted_1d(std::span<const double> xs_sorted, std::span<const double> ys_sorted);

struct SinkhornOptions {
  double epsilon = 1e-2;      // target regularization, squared-length units
  std::size_t max_iters = 100000;
  double tol = 1e-9;          // L1 row-marginal violation at the target epsilon
  double scaling = 0.5;       // epsilon multiplier between stages
};

struct SinkhornResult {
  double cost = 0.0;          // <P, C> of the final entropic plan
  double entropic_objective = 0.0;  // <P, C> + epsilon * sum P (log P - 1)
  double marginal_violation = 0.0;
  std::size_t iterations = 0;
  std::size_t stages = 0;
  double epsilon = 0.0;
};

/// Log-domain Sinkhorn with epsilon scaling; supports unequal sizes.
/// Throws ConvergenceError (carrying the last violation) if max_iters is exhausted.
SinkhornResult sinkhorn_w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const SinkhornOptions& opts);

/// Max over unit directions u of the 1-d W2 between <x, u> projections (equal sizes).
/// Orthogonal projection is 1-Lipschitz, so this never exceeds W2(mu, nu).
double w2_projection_lower(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const PointCloud& directions);

/// Coordinate axes followed by `random_count` uniform directions on the sphere.
PointCloud projection_directions(std::size_t dim, std::size_t random_count, Rng& rng);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace w2lab
