#include "w2lab/increment.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "w2lab/q_stats.hpp"
#include "w2lab/transport.hpp"

namespace w2lab {

double increment_w2_estimate(const CovarianceSpec& cov, const BoundedSampler* x, std::uint64_t n, std::size_t m, Rng& rng,
                             std::string* estimator) {
  const std::size_t k = cov.dim();
  if (k > 3) throw InvalidArgument("increment_w2_estimate: k > 3 is unsupported (no reliable estimator)");
  if (n < 2) throw InvalidArgument("increment_w2_estimate: n must be at least 2");
  if (m < 1) throw InvalidArgument("increment_w2_estimate: m must be positive");
  if (x && x->dim() != k) throw InvalidArgument("increment_w2_estimate: sampler dimension does not match covariance");
  const double nd = static_cast<double>(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  PointCloud lhs(k, m), rhs(k, m);
  std::vector<double> draw(k, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t i = 0; i < k; ++i) lhs(t, i) = std::sqrt(nd) * cov.sigma(i) * normal(rng);
  }
  for (std::size_t t = 0; t < m; ++t) {
    if (x) x->draw_into(draw, rng);
    for (std::size_t i = 0; i < k; ++i) rhs(t, i) = std::sqrt(nd - 1.0) * cov.sigma(i) * normal(rng) + draw[i];
  }
  if (k == 1) {
    if (estimator) *estimator = "quantile-1d";
    return w2_quantile_1d(lhs.raw(), rhs.raw());
  }
  if (estimator) *estimator = "exact";
  return w2_exact(EmpiricalMeasure(std::move(lhs)), EmpiricalMeasure(std::move(rhs))).distance();
}

IncrementCheck increment_bound_check(const BoundedSampler& s, std::uint64_t n, std::size_t m, Rng& rng) {
  const CovarianceSpec cov = s.cov();
  IncrementCheck out;
  out.n = n;
  out.k = s.dim();
  out.m = m;
  out.threshold = increment_threshold(s.bound(), cov);
  if (static_cast<double>(n) < out.threshold * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "increment_bound_check: hypothesis n >= 5 beta^2 / sigma_min^2 fails (n = " << n << ", threshold " << out.threshold
        << ")";
    throw PreconditionError(msg.str());
  }
  if (n < 5 * out.k) throw InvariantViolation("increment_bound_check: n >= 5k must follow from the hypothesis");
  out.bound = 5.0 * std::sqrt(static_cast<double>(out.k)) * s.bound() / static_cast<double>(n);
  out.w2_hat = increment_w2_estimate(cov, &s, n, m, rng, &out.estimator);
  out.pass = out.w2_hat <= out.bound;
  return out;
}

std::string to_string(ScheduleBranch b) {
  switch (b) {
    case ScheduleBranch::zero_dimension: return "zero-dimension";
    case ScheduleBranch::base_case: return "base-case";
    case ScheduleBranch::increment: return "increment";
    case ScheduleBranch::naive: return "naive";
  }
  return "unknown";
}

double rate_bound(std::size_t d, double beta, std::uint64_t n) {
  const double nd = static_cast<double>(n);
  return 5.0 * std::sqrt(static_cast<double>(d)) * beta * (1.0 + std::log(nd)) / std::sqrt(nd);
}

double AnkSchedule::normalized_bound(std::uint64_t n) const {
  return at(n, dim).bound / std::sqrt(static_cast<double>(n));
}

AnkSchedule ank_bound_schedule(std::uint64_t n_max, const CovarianceSpec& cov, double beta) {
  if (n_max < 1) throw InvalidArgument("ank_bound_schedule: n_max must be positive");
  if (!cov.is_sorted_input()) throw InvalidArgument("ank_bound_schedule: covariance must be given with sigma_1 >= ... >= sigma_d");
  if (!(beta > 0.0)) throw InvalidArgument("ank_bound_schedule: beta must be positive");
  if (cov.trace() > beta * beta * (1.0 + 1e-12)) {
    throw PreconditionError("ank_bound_schedule: trace(Sigma) <= beta^2 is required by ||X|| <= beta");
  }
  const std::size_t d = cov.dim();
  AnkSchedule s;
  s.n_max = n_max;
  s.dim = d;
  s.beta = beta;
  s.cells.assign(n_max, std::vector<ScheduleCell>(d + 1));
  s.within_bound = true;
  double prefix_var = 0.0;
  for (std::size_t k = 1; k <= d; ++k) {
    prefix_var += cov.variance(k - 1);
    s.cells[0][k] = {std::sqrt(2.0 * prefix_var), ScheduleBranch::base_case};
  }
  for (std::uint64_t n = 2; n <= n_max; ++n) {
    const double nd = static_cast<double>(n);
    auto& row = s.cells[n - 1];
    const auto& prev = s.cells[n - 2];
    for (std::size_t k = 1; k <= d; ++k) {
      const double sk2 = cov.variance(k - 1);
      if (nd > 5.0 * beta * beta / sk2) {
        row[k] = {prev[k].bound + 5.0 * std::sqrt(static_cast<double>(k)) * beta / nd, ScheduleBranch::increment};
      } else {
        row[k] = {std::sqrt(row[k - 1].bound * row[k - 1].bound + 2.0 * nd * sk2), ScheduleBranch::naive};
      }
    }
  }
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    for (std::size_t k = 1; k <= d; ++k) {
      const double cap = 5.0 * std::sqrt(static_cast<double>(k)) * beta * (1.0 + std::log(static_cast<double>(n)));
      const double b = s.cells[n - 1][k].bound;
      s.worst_ratio = std::max(s.worst_ratio, b / cap);
      if (b > cap + 1e-9) s.within_bound = false;
    }
  }
  return s;
}

}  // namespace w2lab
