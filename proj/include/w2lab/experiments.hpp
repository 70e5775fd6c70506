#pragma once

// End-to-end reproductions: the W2 rate of S_n, the lattice lower bound, and
// the halfspace (convex-indicator) conversion.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "w2lab/gaussmath.hpp"
#include "w2lab/q_stats.hpp"
#include "w2lab/samplers.hpp"
#include "w2lab/transport.hpp"

namespace w2lab {

enum class Estimator { quantile_1d, exact, sinkhorn, projection_lower };
std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

/// Throws InvalidArgument if the estimator cannot handle dimension d
/// (quantile-1d needs d = 1, exact needs d <= 3).
void require_estimator_supports(Estimator e, std::size_t d);

/// Powers of two from lo to hi inclusive.
std::vector<std::uint64_t> powers_of_two(std::uint64_t lo, std::uint64_t hi);

struct RateExperimentConfig {
  explicit RateExperimentConfig(BoundedSampler s) : sampler(std::move(s)) {}

  BoundedSampler sampler;
  std::vector<std::uint64_t> n_grid = powers_of_two(16, 4096);
  std::size_t replicas = 10;
  std::size_t m = 100000;
  Estimator estimator = Estimator::quantile_1d;
  std::uint64_t root_seed = 0;
  std::size_t workers = 1;
  /// random halfspace directions (besides the axes) for the halfspace discrepancy;
  /// 0 disables it
  std::size_t halfspace_directions = 0;
  /// extra directions for the projection lower bound reported when d >= 2
  std::size_t projection_directions = 16;
  double sinkhorn_epsilon_fraction = 0.01;
  std::string stream = "rate";
};

struct RatePoint {
  std::uint64_t n = 0;
  std::vector<double> w2_replicas;
  double w2_mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double bound = 0.0;  // 5 sqrt(d) beta (1 + ln n) / sqrt(n)
  bool below_bound = false;
  /// d >= 2: certified projection lower bound and the Gaussian-Gaussian distance
  /// between the two clouds' empirical diagonal covariances (replica means)
  std::optional<double> projection_lower;
  std::optional<double> gaussian_bracket;
  /// halfspace discrepancy for each replica (empty when disabled)
  std::vector<double> delta_replicas;
  double delta_se = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;
};

/// Least squares of log(y) on log(x).
RateFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y);

struct RateReport {
  std::size_t dim = 0;
  double beta = 0.0;
  std::size_t m = 0;
  std::size_t replicas = 0;
  Estimator estimator = Estimator::quantile_1d;
  std::vector<RatePoint> points;
  RateFit fit;
  bool all_below_bound = false;
};

/// Student-t 95% interval for the mean of the replicas (replicas >= 3).
void mean_confidence_interval(const std::vector<double>& xs, double& mean, double& lo, double& hi);

/// For each n, `replicas` independent pairs (m draws of S_n / sqrt(n), m draws of Z)
/// and a sample-to-sample W2 estimate. Jobs are seeded by derive_seed(root, stream, job).
RateReport clt_rate_experiment(const RateExperimentConfig& cfg);

/// MC estimate of E d_L(Z), Z ~ N(0, Sigma), m >= 1e5.
Estimate expected_lattice_distance(const CovarianceSpec& cov, const LatticeSpec& spec, std::size_t m, Rng& rng);

/// Mean distance from a uniform point of the unit cube [-1/2, 1/2]^d to its
/// center, by Gauss-Legendre quadrature (d <= 3).
double cube_mean_distance(std::size_t d);

struct LowerPoint {
  std::uint64_t n = 0;
  double proxy = 0.0;      // sqrt(n) E d_L(Z), l_n = beta / sqrt(n)
  double proxy_se = 0.0;
  std::optional<double> empirical;  // sqrt(n) * mean W2-hat
  std::vector<double> empirical_replicas;
};

struct LowerConfig {
  explicit LowerConfig(BoundedSampler s) : sampler(std::move(s)) {}

  BoundedSampler sampler;
  std::vector<std::uint64_t> n_grid = powers_of_two(16, 4096);
  std::size_t proxy_m = 1000000;
  /// grid points with an empirical W2 estimate (subset of n_grid); empty = none
  std::vector<std::uint64_t> empirical_n;
  std::size_t m = 100000;
  std::size_t replicas = 3;
  Estimator estimator = Estimator::quantile_1d;
  std::uint64_t root_seed = 0;
  std::size_t workers = 1;
  std::string stream = "lower";
};

struct LowerReport {
  std::size_t dim = 0;
  double beta = 0.0;
  std::vector<LowerPoint> points;
  double target = 0.0;               // sqrt(d) beta / 4
  double cube_average = 0.0;         // measured mean distance per unit cube (units of l)
  double cube_display_constant = 0.0;  // (1/2) sqrt(d), the intermediate display
  double plateau = 0.0;              // proxy at the largest n
  bool plateau_ok = false;           // plateau >= 0.95 target
};

/// Requires support in beta Z^d (PreconditionError otherwise).
LowerReport lattice_lower_experiment(const LowerConfig& cfg);

struct HalfspaceDiscrepancy {
  double delta = 0.0;
  double se = 0.0;  // 0.5 / sqrt(m), the largest binomial standard error
  std::size_t direction = 0;
  double threshold = 0.0;
};

/// sup over the given directions u and thresholds t of |P_hat(<x, u> <= t) - P(<Z, u> <= t)|,
/// Z ~ N(0, Sigma), with the Gaussian side exact. Ties (atoms) are handled
/// by checking both one-sided limits at every distinct projected value.
HalfspaceDiscrepancy halfspace_discrepancy(const PointCloud& cloud, const CovarianceSpec& cov, const PointCloud& directions);

struct CiReport {
  std::uint64_t n = 0;
  double delta_hat = 0.0;
  double se = 0.0;
  double w2_hat = 0.0;
  double rhs = 0.0;  // 5 d^{1/6} w2_hat^{2/3}
  bool pass = false;
};

/// One S_n cloud of size m and one Gaussian cloud; halfspaces over the axes
/// plus `directions` random directions.
CiReport ci_halfspace_experiment(const BoundedSampler& s, std::uint64_t n, std::size_t m, std::size_t directions, Rng& rng);

/// 5 d^{1/6} w^{2/3}.
double w2_to_convex_bound(std::size_t d, double w2);

struct CiCalibration {
  double shift = 0.5;
  double delta_exact = 0.0;      // 2 Phi(shift/2) - 1
  double delta_numeric = 0.0;    // sup_t |Phi(t - shift) - Phi(t)| by golden-section search
  double w2 = 0.0;               // = shift
  double bound = 0.0;            // 5 shift^{2/3}
  bool pass = false;
};

/// N(shift, 1) against N(0, 1) in d = 1.
CiCalibration ci_calibration(double shift = 0.5);

/// d^{1/4} beta3^3 / sqrt(n); reference curve only.
double bentkus_reference_curve(std::size_t d, std::uint64_t n, double beta3);

}  // namespace w2lab
