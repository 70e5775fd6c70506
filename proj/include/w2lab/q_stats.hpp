#pragma once

// Per-coordinate exponents Q_i of the chi-square identity, their moment
// bounds, and the exponential moments E exp(Q), E exp(Q - Q_i).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "w2lab/gaussmath.hpp"
#include "w2lab/samplers.hpp"

namespace w2lab {

/// r(n) = 1/(2(n^2-1)) - (1/2) log(1 + 1/(n^2-1)), n >= 2.
double r_of_n(std::uint64_t n);

struct QStats {
  std::vector<double> q_i;
  double q_total = 0.0;
  double r_n = 0.0;
  std::uint64_t n = 0;
  Vector y;
  Vector y_prime;
};

/// Q_i = (2n^2 Y_i Y'_i - n Y_i^2 - n Y'_i^2 + sigma_i^2) / (2 sigma_i^2 (n^2-1)) - r(n).
/// When beta is given, ||Y||, ||Y'|| <= beta/sqrt(n) is enforced (PreconditionError).
QStats compute_q_stats(std::span<const double> y, std::span<const double> y_prime, const CovarianceSpec& cov,
                       std::uint64_t n, std::optional<double> beta = std::nullopt);

/// How expectations over pairs (Y, Y') are formed.
struct MomentMode {
  bool exact = true;
  std::size_t pairs = 0;
  std::uint64_t seed = 0;

  static MomentMode enumeration() { return {}; }
  static MomentMode monte_carlo(std::size_t pairs, std::uint64_t seed) { return {false, pairs, seed}; }
};

/// value with standard error (0 for exact enumeration)
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double se = 0.0;
  double rhs = 0.0;
  bool equality = false;  // identity check rather than an upper bound
  bool pass = false;
};

struct QMomentReport {
  std::uint64_t n = 0;
  std::size_t k = 0;
  bool exact = true;
  std::size_t pairs = 0;
  std::vector<Estimate> mean_q;        // E Q_i
  std::vector<Estimate> mean_qq;       // E Q_i Q_j, row-major k x k
  std::vector<Estimate> mean_cross;    // E (Q - Q_i) Q_i
  Estimate mean_q_sq;                  // E Q^2
  /// pairs violating a pointwise |Q| estimate, and the largest lhs - rhs seen
  std::size_t pointwise_violations = 0;
  double pointwise_worst_gap = -1.0;
  std::vector<BoundCheck> checks;

  bool all_pass() const;
};

/// Threshold 5 beta^2 / sigma_min^2 of the increment hypothesis.
double increment_threshold(double beta, const CovarianceSpec& cov);

/// Moments of Q over pairs of independent Y = X/sqrt(n) and the five moment
/// bounds plus the three pointwise |Q| bounds. Monte Carlo checks widen each
/// bound by five standard errors. Throws PreconditionError when
/// n < 5 beta^2 / sigma_min^2, or when enumeration is requested for a
/// sampler without an explicit support.
QMomentReport estimate_q_moments(const BoundedSampler& s, std::uint64_t n, const MomentMode& mode);

/// Largest support (in points) for which pair enumeration is attempted.
inline constexpr std::size_t kMaxPairEnumerationSupport = 4096;

/// E exp(Q) for Y = X/sqrt(n), X with the given support, Q built from cov.
/// This is E f(Z)^2 for the density ratio f of Z_{1-1/n} + Y against Z.
Estimate density_second_moment_rhs(const Support& x_support, std::uint64_t n, const CovarianceSpec& cov);
Estimate density_second_moment_rhs(const BoundedSampler& s, std::uint64_t n, const MomentMode& mode);

/// E exp(Q - Q_i), i zero-based; equals E f_(i)(Z)^2.
Estimate averaged_second_moment(const Support& x_support, std::uint64_t n, const CovarianceSpec& cov, std::size_t i);
Estimate averaged_second_moment(const BoundedSampler& s, std::uint64_t n, std::size_t i, const MomentMode& mode);

/// Support points reordered to the coordinate order stored by cov.
Support align_support(const Support& x_support, const CovarianceSpec& cov);

}  // namespace w2lab
