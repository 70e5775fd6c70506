#pragma once

// The one-step replacement bound W2(Z_n, Z_{n-1} + X) <= 5 sqrt(k) beta / n and
// the double induction over (n, k) that turns it into the rate bound.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "w2lab/gaussmath.hpp"
#include "w2lab/samplers.hpp"
#include "w2lab/verdict.hpp"

namespace w2lab {

struct IncrementCheck {
  std::uint64_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  std::string estimator;
  double w2_hat = 0.0;
  double bound = 0.0;
  double threshold = 0.0;  // 5 beta^2 / sigma_min^2
  bool pass = false;
  /// 1 - w2_hat / bound
  double margin_fraction() const { return 1.0 - w2_hat / bound; }
};

/// Sample-to-sample estimate of W2(Z_n, Z_{n-1} + X) from m draws of each side,
/// Z_t ~ N(0, t cov). x == nullptr means X = 0. Quantile coupling for k = 1,
/// exact assignment for k = 2, 3 (m <= 5000); k > 3 is rejected.
double increment_w2_estimate(const CovarianceSpec& cov, const BoundedSampler* x, std::uint64_t n, std::size_t m, Rng& rng,
                             std::string* estimator = nullptr);

/// Compares the estimate with 5 sqrt(k) beta / n. Throws PreconditionError when
/// n < 5 beta^2 / sigma_min^2.
IncrementCheck increment_bound_check(const BoundedSampler& s, std::uint64_t n, std::size_t m, Rng& rng);

enum class ScheduleBranch { zero_dimension, base_case, increment, naive };
std::string to_string(ScheduleBranch b);

struct ScheduleCell {
  double bound = 0.0;
  ScheduleBranch branch = ScheduleBranch::zero_dimension;
};

/// cells[n - 1][k] certifies A_{n,k} = W2(P_k(S_n), P_k(Z_n)) for unnormalized sums.
struct AnkSchedule {
  std::uint64_t n_max = 0;
  std::size_t dim = 0;
  double beta = 0.0;
  std::vector<std::vector<ScheduleCell>> cells;
  /// every entry <= 5 sqrt(k) beta (1 + ln n) + 1e-9
  bool within_bound = false;
  /// max over entries of bound / (5 sqrt(k) beta (1 + ln n)) for k >= 1
  double worst_ratio = 0.0;

  const ScheduleCell& at(std::uint64_t n, std::size_t k) const { return cells.at(n - 1).at(k); }
  /// Certified W2(S_n / sqrt(n), Z) for the full dimension.
  double normalized_bound(std::uint64_t n) const;
};

/// Replays the induction: A_{n,0} = 0, A_{1,k} = sqrt(2 sum_{i<=k} sigma_i^2); for n > 1,
/// A_{n,k} = A_{n-1,k} + 5 sqrt(k) beta / n when n > 5 beta^2 / sigma_k^2, and otherwise
/// A_{n,k} = sqrt(A_{n,k-1}^2 + 2 n sigma_k^2).
/// Requires cov given in non-increasing order and trace(cov) <= beta^2.
AnkSchedule ank_bound_schedule(std::uint64_t n_max, const CovarianceSpec& cov, double beta);

/// 5 sqrt(d) beta (1 + ln n) / sqrt(n).
double rate_bound(std::size_t d, double beta, std::uint64_t n);

}  // namespace w2lab
