#include "w2lab/q_stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "w2lab/rng.hpp"
#include "w2lab/transport.hpp"

namespace w2lab {

namespace {

constexpr double kPointwiseTol = 1e-12;

double n_sq_minus_one(std::uint64_t n) {
  const double nd = static_cast<double>(n);
  return (nd - 1.0) * (nd + 1.0);
}

// Weighted mean with an error estimate. Exact mode feeds probabilities as
// weights; Monte Carlo mode feeds weight 1 and uses Welford's update.
class MeanAccumulator {
 public:
  void add_weighted(double w, double x) { sum_.add(w * x); }
  void add_sample(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  Estimate exact() const { return {sum_.value(), 0.0}; }
  Estimate sampled() const {
    Estimate e{mean_, 0.0};
    if (count_ > 1) e.se = std::sqrt(m2_ / static_cast<double>(count_ - 1) / static_cast<double>(count_));
    return e;
  }

 private:
  KahanSum sum_;
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Calls visit(weight, y, y') for every pair of the chosen pair law.
// Exact: all support pairs with product probabilities. Monte Carlo: `pairs`
// independent draws, weight 1.
void for_each_pair(const Support& ys, const std::function<void(double, std::span<const double>, std::span<const double>)>& visit) {
  const std::size_t m = ys.points.size();
  for (std::size_t a = 0; a < m; ++a) {
    if (ys.prob[a] == 0.0) continue;
    for (std::size_t b = 0; b < m; ++b) {
      if (ys.prob[b] == 0.0) continue;
      visit(ys.prob[a] * ys.prob[b], ys.points.point(a), ys.points.point(b));
    }
  }
}

Support scaled_support(const Support& x_support, std::uint64_t n) {
  Support ys = x_support;
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  PointCloud pts(ys.points.dim(), ys.points.size());
  for (std::size_t a = 0; a < ys.points.size(); ++a) {
    for (std::size_t j = 0; j < ys.points.dim(); ++j) pts(a, j) = x_support.points(a, j) * inv;
  }
  ys.points = std::move(pts);
  return ys;
}

void require_enumerable(const Support& s) {
  if (s.points.size() > kMaxPairEnumerationSupport) {
    throw CapacityError("pair enumeration over " + std::to_string(s.points.size()) +
                        " support points exceeds the limit " + std::to_string(kMaxPairEnumerationSupport));
  }
}

// Q_i for one pair, written into q; returns Q.
double q_values(std::span<const double> y, std::span<const double> yp, const CovarianceSpec& cov, double nd, double denom,
                double rn, std::vector<double>& q) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double s2 = cov.variance(i);
    q[i] = (2.0 * nd * nd * y[i] * yp[i] - nd * y[i] * y[i] - nd * yp[i] * yp[i] + s2) / (2.0 * s2 * denom) - rn;
    total += q[i];
  }
  return total;
}

Estimate exp_moment_exact(const Support& x_support, std::uint64_t n, const CovarianceSpec& cov, std::optional<std::size_t> drop) {
  if (n < 2) throw InvalidArgument("n must be at least 2");
  if (x_support.points.dim() != cov.dim()) throw InvalidArgument("support dimension does not match covariance");
  require_enumerable(x_support);
  const Support ys = scaled_support(align_support(x_support, cov), n);
  const double nd = static_cast<double>(n), denom = n_sq_minus_one(n), rn = r_of_n(n);
  std::vector<double> q(cov.dim());
  KahanSum sum;
  for_each_pair(ys, [&](double w, std::span<const double> y, std::span<const double> yp) {
    double total = q_values(y, yp, cov, nd, denom, rn, q);
    if (drop) total -= q[*drop];
    sum.add(w * std::exp(total));
  });
  return {sum.value(), 0.0};
}

Estimate exp_moment_mc(const BoundedSampler& s, std::uint64_t n, std::optional<std::size_t> drop, const MomentMode& mode) {
  if (n < 2) throw InvalidArgument("n must be at least 2");
  if (mode.pairs < 2) throw InvalidArgument("Monte Carlo mode needs at least two pairs");
  const CovarianceSpec cov = s.cov();
  const double nd = static_cast<double>(n), denom = n_sq_minus_one(n), rn = r_of_n(n);
  const double inv = 1.0 / std::sqrt(nd);
  Rng rng = make_rng(mode.seed, "exp-moment");
  std::vector<double> y(s.dim()), yp(s.dim()), q(s.dim());
  MeanAccumulator acc;
  for (std::size_t t = 0; t < mode.pairs; ++t) {
    s.draw_into(y, rng);
    s.draw_into(yp, rng);
    for (std::size_t j = 0; j < y.size(); ++j) {
      y[j] *= inv;
      yp[j] *= inv;
    }
    double total = q_values(y, yp, cov, nd, denom, rn, q);
    if (drop) total -= q[*drop];
    acc.add_sample(std::exp(total));
  }
  return acc.sampled();
}

}  // namespace

double r_of_n(std::uint64_t n) {
  if (n < 2) throw InvalidArgument("r_of_n: n must be at least 2");
  const double t = 1.0 / n_sq_minus_one(n);
  if (t < 0.1) {
    // t/2 - log1p(t)/2 = sum_{j>=2} (-1)^j t^j / (2j)
    double term = t * t, sum = 0.0;
    for (int j = 2; j < 40; ++j) {
      const double add = ((j % 2 == 0) ? 1.0 : -1.0) * term / (2.0 * j);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
      term *= t;
    }
    return sum;
  }
  return 0.5 * t - 0.5 * std::log1p(t);
}

QStats compute_q_stats(std::span<const double> y, std::span<const double> y_prime, const CovarianceSpec& cov,
                       std::uint64_t n, std::optional<double> beta) {
  if (y.size() != cov.dim() || y_prime.size() != cov.dim()) throw InvalidArgument("compute_q_stats: dimension mismatch");
  if (n < 2) throw InvalidArgument("compute_q_stats: n must be at least 2");
  if (beta) {
    const double cap = *beta / std::sqrt(static_cast<double>(n)) * (1.0 + 1e-12);
    auto norm = [](std::span<const double> v) {
      double s = 0.0;
      for (double c : v) s += c * c;
      return std::sqrt(s);
    };
    if (norm(y) > cap || norm(y_prime) > cap) throw PreconditionError("compute_q_stats: ||Y|| <= beta/sqrt(n) violated");
  }
  QStats out;
  out.n = n;
  out.r_n = r_of_n(n);
  out.q_i.resize(cov.dim());
  out.y.assign(y.begin(), y.end());
  out.y_prime.assign(y_prime.begin(), y_prime.end());
  q_values(y, y_prime, cov, static_cast<double>(n), n_sq_minus_one(n), out.r_n, out.q_i);
  KahanSum total;
  for (double qi : out.q_i) total.add(qi);
  out.q_total = total.value();
  return out;
}

bool QMomentReport::all_pass() const {
  return pointwise_violations == 0 && std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
}

double increment_threshold(double beta, const CovarianceSpec& cov) {
  return 5.0 * beta * beta / (cov.sigma_min() * cov.sigma_min());
}

Support align_support(const Support& x_support, const CovarianceSpec& cov) {
  if (x_support.points.dim() != cov.dim()) throw InvalidArgument("support dimension does not match covariance");
  if (cov.is_sorted_input()) return x_support;
  Support out;
  out.prob = x_support.prob;
  out.points = PointCloud(cov.dim(), x_support.points.size());
  const auto& perm = cov.permutation();
  for (std::size_t a = 0; a < x_support.points.size(); ++a) {
    for (std::size_t k = 0; k < cov.dim(); ++k) out.points(a, k) = x_support.points(a, perm[k]);
  }
  return out;
}

QMomentReport estimate_q_moments(const BoundedSampler& s, std::uint64_t n, const MomentMode& mode) {
  if (n < 2) throw InvalidArgument("estimate_q_moments: n must be at least 2");
  const CovarianceSpec cov = s.cov();
  const double beta = s.bound();
  const double threshold = increment_threshold(beta, cov);
  if (static_cast<double>(n) < threshold * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "estimate_q_moments: hypothesis n >= 5 beta^2 / sigma_min^2 fails (n = " << n << ", 5 beta^2 / sigma_min^2 = "
        << threshold << ")";
    throw PreconditionError(msg.str());
  }
  if (mode.exact && !s.enumerable()) throw PreconditionError("estimate_q_moments: exact mode needs an enumerable support");
  if (!mode.exact && mode.pairs < 2) throw InvalidArgument("estimate_q_moments: Monte Carlo mode needs at least two pairs");

  const std::size_t k = s.dim();
  const double nd = static_cast<double>(n), denom = n_sq_minus_one(n), rn = r_of_n(n);

  std::vector<MeanAccumulator> acc_q(k), acc_qq(k * k), acc_cross(k);
  MeanAccumulator acc_q2;
  std::vector<double> q(k);
  QMomentReport rep;
  rep.n = n;
  rep.k = k;
  rep.exact = mode.exact;

  auto pointwise = [&](std::span<const double> y, std::span<const double> yp, double total) {
    const double c = nd * nd / denom;
    auto record = [&](double lhs, double rhs) {
      const double gap = lhs - rhs;
      rep.pointwise_worst_gap = std::max(rep.pointwise_worst_gap, gap);
      if (gap > kPointwiseTol) ++rep.pointwise_violations;
    };
    for (std::size_t i = 0; i < k; ++i) {
      record(std::abs(q[i]), c * std::abs(y[i] * yp[i]) / cov.variance(i) + 1.0 / (2.0 * nd));
      record(std::abs(total - q[i]), 1.0);
    }
    record(std::abs(total), 1.0);
  };

  auto visit = [&](double w, std::span<const double> y, std::span<const double> yp, bool weighted) {
    const double total = q_values(y, yp, cov, nd, denom, rn, q);
    pointwise(y, yp, total);
    auto feed = [&](MeanAccumulator& a, double x) {
      if (weighted) a.add_weighted(w, x);
      else a.add_sample(x);
    };
    for (std::size_t i = 0; i < k; ++i) {
      feed(acc_q[i], q[i]);
      feed(acc_cross[i], (total - q[i]) * q[i]);
      for (std::size_t j = 0; j < k; ++j) feed(acc_qq[i * k + j], q[i] * q[j]);
    }
    feed(acc_q2, total * total);
  };

  if (mode.exact) {
    require_enumerable(*s.support());
    const Support ys = scaled_support(*s.support(), n);
    for_each_pair(ys, [&](double w, std::span<const double> y, std::span<const double> yp) { visit(w, y, yp, true); });
    rep.pairs = ys.points.size() * ys.points.size();
  } else {
    Rng rng = make_rng(mode.seed, "q-moments");
    std::vector<double> y(k), yp(k);
    const double inv = 1.0 / std::sqrt(nd);
    for (std::size_t t = 0; t < mode.pairs; ++t) {
      s.draw_into(y, rng);
      s.draw_into(yp, rng);
      for (std::size_t j = 0; j < k; ++j) {
        y[j] *= inv;
        yp[j] *= inv;
      }
      visit(1.0, y, yp, false);
    }
    rep.pairs = mode.pairs;
  }

  auto result = [&](const MeanAccumulator& a) { return mode.exact ? a.exact() : a.sampled(); };
  for (std::size_t i = 0; i < k; ++i) {
    rep.mean_q.push_back(result(acc_q[i]));
    rep.mean_cross.push_back(result(acc_cross[i]));
  }
  for (std::size_t ij = 0; ij < k * k; ++ij) rep.mean_qq.push_back(result(acc_qq[ij]));
  rep.mean_q_sq = result(acc_q2);

  const double denom_sq = denom * denom;
  const auto& fourth = s.fourth_cross_moments();
  auto add_upper = [&](std::string name, const Estimate& e, double rhs) {
    BoundCheck c{std::move(name), e.value, e.se, rhs, false, false};
    c.pass = e.value - 5.0 * e.se <= rhs + kPointwiseTol;
    rep.checks.push_back(std::move(c));
  };
  for (std::size_t i = 0; i < k; ++i) {
    BoundCheck c{"E Q_" + std::to_string(i + 1) + " identity", rep.mean_q[i].value, rep.mean_q[i].se,
                 -1.0 / (2.0 * denom) - rn, true, false};
    c.pass = std::abs(c.lhs - c.rhs) <= std::max(1e-12, 5.0 * c.se);
    rep.checks.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double eyy = fourth[i * k + j] / (nd * nd);
      const double rhs = (i == j ? nd * nd / denom_sq : 0.0) +
                         nd * nd * eyy / (2.0 * cov.variance(i) * cov.variance(j) * denom_sq) + 1.0 / (2.0 * denom_sq);
      add_upper("E Q_" + std::to_string(i + 1) + " Q_" + std::to_string(j + 1) + " bound", rep.mean_qq[i * k + j], rhs);
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    add_upper("E Q_" + std::to_string(i + 1) + "^2 bound", rep.mean_qq[i * k + i], (2.0 * nd * nd + nd + 1.0) / (2.0 * denom_sq));
  }
  for (std::size_t i = 0; i < k; ++i) {
    add_upper("E (Q - Q_" + std::to_string(i + 1) + ") Q_" + std::to_string(i + 1) + " bound", rep.mean_cross[i],
              nd * static_cast<double>(k) / (2.0 * denom_sq));
  }
  add_upper("E Q^2 bound", rep.mean_q_sq, 2.0 * static_cast<double>(k) / denom);
  return rep;
}

Estimate density_second_moment_rhs(const Support& x_support, std::uint64_t n, const CovarianceSpec& cov) {
  return exp_moment_exact(x_support, n, cov, std::nullopt);
}

Estimate density_second_moment_rhs(const BoundedSampler& s, std::uint64_t n, const MomentMode& mode) {
  if (mode.exact) {
    if (!s.enumerable()) throw PreconditionError("density_second_moment_rhs: exact mode needs an enumerable support");
    return exp_moment_exact(*s.support(), n, s.cov(), std::nullopt);
  }
  return exp_moment_mc(s, n, std::nullopt, mode);
}

Estimate averaged_second_moment(const Support& x_support, std::uint64_t n, const CovarianceSpec& cov, std::size_t i) {
  if (i >= cov.dim()) throw InvalidArgument("averaged_second_moment: coordinate out of range");
  return exp_moment_exact(x_support, n, cov, i);
}

Estimate averaged_second_moment(const BoundedSampler& s, std::uint64_t n, std::size_t i, const MomentMode& mode) {
  if (i >= s.dim()) throw InvalidArgument("averaged_second_moment: coordinate out of range");
  if (mode.exact) {
    if (!s.enumerable()) throw PreconditionError("averaged_second_moment: exact mode needs an enumerable support");
    return exp_moment_exact(*s.support(), n, s.cov(), i);
  }
  return exp_moment_mc(s, n, i, mode);
}

}  // namespace w2lab
