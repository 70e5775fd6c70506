#include "w2lab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "w2lab/assignment.hpp"

namespace w2lab {

namespace {

void require_equal_sizes(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const char* who) {
  if (mu.dim() != nu.dim()) throw InvalidArgument(std::string(who) + ": dimension mismatch");
  if (mu.size() != nu.size()) {
    throw InvalidArgument(std::string(who) + ": unequal point counts (" + std::to_string(mu.size()) + " vs " +
                          std::to_string(nu.size()) + "); use sinkhorn_w2 for unequal sizes");
  }
}

void require_cap(std::size_t m, std::size_t cap, const char* who) {
  if (m > cap) {
    throw CapacityError(std::string(who) + ": " + std::to_string(m) + " points exceeds exact-solver cap " + std::to_string(cap));
  }
}

double log_sum_exp(const double* v, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

EmpiricalMeasure::EmpiricalMeasure(PointCloud points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidArgument("EmpiricalMeasure: at least one point required");
}

EmpiricalMeasure EmpiricalMeasure::from_1d(std::span<const double> xs) {
  return EmpiricalMeasure(PointCloud(1, std::vector<double>(xs.begin(), xs.end())));
}

double TransportPlan::max_marginal_violation(std::size_t n_source, std::size_t n_target) const {
  std::vector<double> row(n_source, 0.0), col(n_target, 0.0);
  for (const auto& e : entries) {
    row[e.source] += e.mass;
    col[e.target] += e.mass;
  }
  double worst = 0.0;
  for (double r : row) worst = std::max(worst, std::abs(r - 1.0 / static_cast<double>(n_source)));
  for (double c : col) worst = std::max(worst, std::abs(c - 1.0 / static_cast<double>(n_target)));
  return worst;
}

double ExactTransport::distance() const { return std::sqrt(std::max(0.0, cost)); }

ExactTransport w2_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t cap) {
  require_equal_sizes(mu, nu, "w2_exact");
  const std::size_t m = mu.size();
  require_cap(m, cap, "w2_exact");
  const PointCloud& x = mu.points();
  const PointCloud& y = nu.points();
  const std::size_t d = mu.dim();
  const double* xr = x.raw().data();
  const double* yr = y.raw().data();
  Assignment a = solve_assignment(m, [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = xr[i * d + k] - yr[j * d + k];
      s += diff * diff;
    }
    return s;
  });

  ExactTransport out;
  const double w = mu.weight();
  KahanSum total;
  out.plan.entries.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = a.col_of_row[i];
    out.plan.entries.push_back({i, j, w});
    total.add(squared_distance(x.point(i), y.point(j)));
  }
  out.cost = total.value() * w;
  out.plan.cost = out.cost;
  out.plan.permutation = std::move(a.col_of_row);
  return out;
}

double w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t cap) {
  require_equal_sizes(mu, nu, "w1_exact");
  const std::size_t m = mu.size();
  require_cap(m, cap, "w1_exact");
  const PointCloud& x = mu.points();
  const PointCloud& y = nu.points();
  Assignment a = solve_assignment(m, [&](std::size_t i, std::size_t j) { return std::sqrt(squared_distance(x.point(i), y.point(j))); });
  KahanSum total;
  for (std::size_t i = 0; i < m; ++i) total.add(std::sqrt(squared_distance(x.point(i), y.point(a.col_of_row[i]))));
  return total.value() / static_cast<double>(m);
}

double w2_sorted_1d(std::span<const double> xs_sorted, std::span<const double> ys_sorted) {
  if (xs_sorted.empty() || ys_sorted.empty()) throw InvalidArgument("w2_quantile_1d: empty input");
  if (xs_sorted.size() != ys_sorted.size()) throw InvalidArgument("w2_quantile_1d: inputs must have equal length");
  KahanSum s;
  for (std::size_t i = 0; i < xs_sorted.size(); ++i) {
    const double diff = xs_sorted[i] - ys_sorted[i];
    s.add(diff * diff);
  }
  return std::sqrt(s.value() / static_cast<double>(xs_sorted.size()));
}

double w2_quantile_1d(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw InvalidArgument("w2_quantile_1d: empty input");
  if (xs.size() != ys.size()) throw InvalidArgument("w2_quantile_1d: inputs must have equal length");
  std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return w2_sorted_1d(a, b);
}

SinkhornResult sinkhorn_w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const SinkhornOptions& opts) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("sinkhorn_w2: dimension mismatch");
  if (!(opts.epsilon > 0.0)) throw InvalidArgument("sinkhorn_w2: epsilon must be positive");
  if (!(opts.scaling > 0.0 && opts.scaling < 1.0)) throw InvalidArgument("sinkhorn_w2: scaling must lie in (0, 1)");
  const std::size_t na = mu.size(), nb = nu.size();
  if (na * nb > 25'000'000) throw CapacityError("sinkhorn_w2: cost matrix too large");

  std::vector<double> cost(na * nb);
  double cmax = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      cost[i * nb + j] = squared_distance(mu.points().point(i), nu.points().point(j));
      cmax = std::max(cmax, cost[i * nb + j]);
    }
  }
  const double log_a = -std::log(static_cast<double>(na));
  const double log_b = -std::log(static_cast<double>(nb));
  std::vector<double> f(na, 0.0), g(nb, 0.0), buf(std::max(na, nb));

  auto row_violation = [&](double eps) {
    double v = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t j = 0; j < nb; ++j) buf[j] = (f[i] + g[j] - cost[i * nb + j]) / eps;
      v += std::abs(std::exp(log_sum_exp(buf.data(), nb)) - std::exp(log_a));
    }
    return v;
  };

  SinkhornResult res;
  double eps = std::max(opts.epsilon, cmax);
  double violation = std::numeric_limits<double>::infinity();
  while (true) {
    const bool final_stage = eps <= opts.epsilon;
    const double stage_tol = final_stage ? opts.tol : std::max(opts.tol, 1e-3);
    ++res.stages;
    while (true) {
      if (res.iterations >= opts.max_iters) {
        throw ConvergenceError("sinkhorn_w2: no convergence within " + std::to_string(opts.max_iters) +
                                   " iterations (marginal violation " + std::to_string(violation) + ")",
                               violation);
      }
      for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) buf[j] = (g[j] - cost[i * nb + j]) / eps;
        f[i] = eps * (log_a - log_sum_exp(buf.data(), nb));
      }
      for (std::size_t j = 0; j < nb; ++j) {
        for (std::size_t i = 0; i < na; ++i) buf[i] = (f[i] - cost[i * nb + j]) / eps;
        g[j] = eps * (log_b - log_sum_exp(buf.data(), na));
      }
      ++res.iterations;
      if (res.iterations % 10 == 0 || final_stage) {
        violation = row_violation(eps);
        if (violation <= stage_tol) break;
      }
    }
    if (final_stage) break;
    eps = std::max(opts.epsilon, eps * opts.scaling);
  }

  KahanSum transport, entropy;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double logp = (f[i] + g[j] - cost[i * nb + j]) / eps;
      const double p = std::exp(logp);
      transport.add(p * cost[i * nb + j]);
      if (p > 0.0) entropy.add(p * (logp - 1.0));
    }
  }
  res.cost = transport.value();
  res.entropic_objective = res.cost + eps * entropy.value();
  res.marginal_violation = violation;
  res.epsilon = eps;
  return res;
}

double w2_projection_lower(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const PointCloud& directions) {
  require_equal_sizes(mu, nu, "w2_projection_lower");
  if (directions.dim() != mu.dim()) throw InvalidArgument("w2_projection_lower: direction dimension mismatch");
  const std::size_t m = mu.size();
  std::vector<double> a(m), b(m);
  double best = 0.0;
  for (std::size_t k = 0; k < directions.size(); ++k) {
    auto u = directions.point(k);
    double norm_sq = 0.0;
    for (double c : u) norm_sq += c * c;
    if (std::abs(norm_sq - 1.0) > 1e-9) throw InvalidArgument("w2_projection_lower: directions must be unit vectors");
    for (std::size_t i = 0; i < m; ++i) {
      a[i] = 0.0;
      b[i] = 0.0;
      for (std::size_t c = 0; c < u.size(); ++c) {
        a[i] += u[c] * mu.points()(i, c);
        b[i] += u[c] * nu.points()(i, c);
      }
    }
    best = std::max(best, w2_quantile_1d(a, b));
  }
  return best;
}

PointCloud projection_directions(std::size_t dim, std::size_t random_count, Rng& rng) {
  PointCloud dirs(dim, dim + random_count);
  for (std::size_t k = 0; k < dim; ++k) dirs(k, k) = 1.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < random_count; ++r) {
    double n2 = 0.0;
    auto u = dirs.point(dim + r);
    do {
      n2 = 0.0;
      for (auto& c : u) {
        c = normal(rng);
        n2 += c * c;
      }
    } while (n2 == 0.0);
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& c : u) c *= inv;
  }
  return dirs;
}

}  // namespace w2lab
