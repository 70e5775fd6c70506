#include "w2lab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "w2lab/increment.hpp"
#include "w2lab/parallel.hpp"
#include "w2lab/quadrature.hpp"

namespace w2lab {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::quantile_1d: return "quantile-1d";
    case Estimator::exact: return "exact";
    case Estimator::sinkhorn: return "sinkhorn";
    case Estimator::projection_lower: return "projection-lower";
  }
  return "unknown";
}

Estimator estimator_from_string(const std::string& name) {
  if (name == "quantile-1d") return Estimator::quantile_1d;
  if (name == "exact") return Estimator::exact;
  if (name == "sinkhorn") return Estimator::sinkhorn;
  if (name == "projection-lower") return Estimator::projection_lower;
  throw InvalidArgument("unknown estimator '" + name + "' (expected quantile-1d, exact, sinkhorn or projection-lower)");
}

void require_estimator_supports(Estimator e, std::size_t d) {
  if (e == Estimator::quantile_1d && d != 1) {
    throw InvalidArgument("estimator quantile-1d needs d = 1 (got d = " + std::to_string(d) + ")");
  }
  if ((e == Estimator::exact || e == Estimator::sinkhorn) && d > 3) {
    throw InvalidArgument("estimator " + to_string(e) + " supports d <= 3 (got d = " + std::to_string(d) + ")");
  }
}

std::vector<std::uint64_t> powers_of_two(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = 1; n <= hi; n *= 2) {
    if (n >= lo) out.push_back(n);
  }
  return out;
}

RateFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_log_log: need at least two paired points");
  const std::size_t k = x.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("fit_log_log: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    syy += (ly[i] - my) * (ly[i] - my);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  return f;
}

void mean_confidence_interval(const std::vector<double>& xs, double& mean, double& lo, double& hi) {
  if (xs.size() < 3) throw InvalidArgument("mean_confidence_interval: at least 3 replicas required");
  const double r = static_cast<double>(xs.size());
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= r;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (r - 1.0));
  boost::math::students_t dist(r - 1.0);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  lo = mean - t * sd / std::sqrt(r);
  hi = mean + t * sd / std::sqrt(r);
}

namespace {

PointCloud draw_normalized_sums(const BoundedSampler& s, std::uint64_t n, std::size_t m, Rng& rng) {
  PointCloud cloud(s.dim(), m);
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < m; ++i) {
    auto p = cloud.point(i);
    s.draw_sum_into(n, p, rng);
    for (double& c : p) c *= inv;
  }
  return cloud;
}

double median_pairwise_cost(const PointCloud& a, const PointCloud& b) {
  const std::size_t cap = std::min<std::size_t>(200, std::min(a.size(), b.size()));
  std::vector<double> costs;
  costs.reserve(cap * cap);
  for (std::size_t i = 0; i < cap; ++i) {
    for (std::size_t j = 0; j < cap; ++j) costs.push_back(squared_distance(a.point(i), b.point(j)));
  }
  std::nth_element(costs.begin(), costs.begin() + static_cast<std::ptrdiff_t>(costs.size() / 2), costs.end());
  return costs[costs.size() / 2];
}

double estimate_w2(Estimator e, const PointCloud& a, const PointCloud& b, const PointCloud& directions, double eps_fraction) {
  switch (e) {
    case Estimator::quantile_1d: return w2_quantile_1d(a.raw(), b.raw());
    case Estimator::exact: return w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).distance();
    case Estimator::sinkhorn: {
      SinkhornOptions opts;
      opts.epsilon = eps_fraction * median_pairwise_cost(a, b);
      opts.tol = 1e-6;
      return std::sqrt(std::max(0.0, sinkhorn_w2(EmpiricalMeasure(a), EmpiricalMeasure(b), opts).cost));
    }
    case Estimator::projection_lower: return w2_projection_lower(EmpiricalMeasure(a), EmpiricalMeasure(b), directions);
  }
  return 0.0;
}

CovarianceSpec empirical_diagonal(const PointCloud& c) {
  std::vector<double> sds(c.dim());
  for (std::size_t j = 0; j < c.dim(); ++j) {
    double mean = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) mean += c(i, j);
    mean /= static_cast<double>(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) ss += (c(i, j) - mean) * (c(i, j) - mean);
    sds[j] = std::sqrt(std::max(ss / static_cast<double>(c.size()), 1e-300));
  }
  return CovarianceSpec(sds);
}

void validate_grid(const std::vector<std::uint64_t>& grid) {
  if (grid.empty()) throw InvalidArgument("n grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw InvalidArgument("n grid entries must be positive");
    if (i > 0 && grid[i] <= grid[i - 1]) throw InvalidArgument("n grid must be strictly increasing");
  }
}

struct RateJobResult {
  double w2 = 0.0;
  double projection = 0.0;
  double bracket = 0.0;
  double delta = 0.0;
};

}  // namespace

RateReport clt_rate_experiment(const RateExperimentConfig& cfg) {
  const BoundedSampler& s = cfg.sampler;
  const std::size_t d = s.dim();
  require_estimator_supports(cfg.estimator, d);
  validate_grid(cfg.n_grid);
  if (cfg.replicas < 3) throw InvalidArgument("clt_rate_experiment: replicas >= 3 required for confidence intervals");
  if (cfg.m < 2) throw InvalidArgument("clt_rate_experiment: m must be at least 2");
  if (cfg.estimator == Estimator::exact && cfg.m > kDefaultSolverCap) {
    throw CapacityError("clt_rate_experiment: m exceeds the exact-solver cap");
  }
  const CovarianceSpec cov = s.cov();
  const GaussianModel gauss(cov, 1.0);

  Rng dir_rng = make_rng(cfg.root_seed, cfg.stream + "/directions");
  const PointCloud proj_dirs = projection_directions(d, cfg.projection_directions, dir_rng);
  const PointCloud half_dirs = projection_directions(d, d == 1 ? 0 : cfg.halfspace_directions, dir_rng);

  const std::size_t jobs = cfg.n_grid.size() * cfg.replicas;
  std::vector<RateJobResult> results(jobs);
  run_jobs(jobs, cfg.workers, [&](std::size_t job) {
    const std::uint64_t n = cfg.n_grid[job / cfg.replicas];
    Rng rng = make_rng(cfg.root_seed, cfg.stream, job);
    PointCloud sums = draw_normalized_sums(s, n, cfg.m, rng);
    PointCloud z = sample_gaussian(gauss, cfg.m, rng);
    RateJobResult r;
    r.w2 = estimate_w2(cfg.estimator, sums, z, proj_dirs, cfg.sinkhorn_epsilon_fraction);
    if (d >= 2) {
      r.projection = w2_projection_lower(EmpiricalMeasure(sums), EmpiricalMeasure(z), proj_dirs);
      r.bracket = w2_gaussian_diag(empirical_diagonal(sums), empirical_diagonal(z), 1.0, 1.0);
    }
    if (cfg.halfspace_directions > 0) r.delta = halfspace_discrepancy(sums, cov, half_dirs).delta;
    results[job] = r;
  });

  RateReport rep;
  rep.dim = d;
  rep.beta = s.bound();
  rep.m = cfg.m;
  rep.replicas = cfg.replicas;
  rep.estimator = cfg.estimator;
  rep.all_below_bound = true;
  std::vector<double> ns, means;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    RatePoint p;
    p.n = cfg.n_grid[g];
    double proj = 0.0, bracket = 0.0;
    for (std::size_t r = 0; r < cfg.replicas; ++r) {
      const RateJobResult& jr = results[g * cfg.replicas + r];
      p.w2_replicas.push_back(jr.w2);
      proj += jr.projection;
      bracket += jr.bracket;
      if (cfg.halfspace_directions > 0) p.delta_replicas.push_back(jr.delta);
    }
    mean_confidence_interval(p.w2_replicas, p.w2_mean, p.ci_lo, p.ci_hi);
    p.bound = rate_bound(d, s.bound(), p.n);
    p.below_bound = *std::max_element(p.w2_replicas.begin(), p.w2_replicas.end()) <= p.bound;
    if (d >= 2) {
      p.projection_lower = proj / static_cast<double>(cfg.replicas);
      p.gaussian_bracket = bracket / static_cast<double>(cfg.replicas);
    }
    if (cfg.halfspace_directions > 0) p.delta_se = 0.5 / std::sqrt(static_cast<double>(cfg.m));
    rep.all_below_bound = rep.all_below_bound && p.below_bound;
    ns.push_back(static_cast<double>(p.n));
    means.push_back(p.w2_mean);
    rep.points.push_back(std::move(p));
  }
  if (ns.size() >= 2) rep.fit = fit_log_log(ns, means);
  return rep;
}

Estimate expected_lattice_distance(const CovarianceSpec& cov, const LatticeSpec& spec, std::size_t m, Rng& rng) {
  if (m < 100000) throw InvalidArgument("expected_lattice_distance: m >= 1e5 required");
  if (spec.dim != cov.dim()) throw InvalidArgument("expected_lattice_distance: dimension mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(cov.dim());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = cov.sigma(j) * normal(rng);
    const double v = lattice_distance(x, spec);
    const double delta = v - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (v - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(m - 1) / static_cast<double>(m))};
}

double cube_mean_distance(std::size_t d) {
  if (d < 1 || d > 3) throw InvalidArgument("cube_mean_distance: d must be 1, 2 or 3");
  if (d == 1) return 0.25;
  std::vector<double> x, w;
  gauss_legendre(d == 2 ? 400 : 120, x, w);
  // [0, 1/2]^d by symmetry; nodes mapped from [-1, 1].
  for (double& v : x) v = 0.25 * (v + 1.0);
  for (double& v : w) v *= 0.25;
  const double scale = std::pow(2.0, static_cast<double>(d));
  double total = 0.0;
  if (d == 2) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) total += w[i] * w[j] * std::hypot(x[i], x[j]);
    }
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        for (std::size_t k = 0; k < x.size(); ++k) {
          total += w[i] * w[j] * w[k] * std::sqrt(x[i] * x[i] + x[j] * x[j] + x[k] * x[k]);
        }
      }
    }
  }
  return scale * total;
}

LowerReport lattice_lower_experiment(const LowerConfig& cfg) {
  const BoundedSampler& s = cfg.sampler;
  require_lattice_support(s);
  validate_grid(cfg.n_grid);
  const std::size_t d = s.dim();
  const double beta = s.bound();
  const CovarianceSpec cov = s.cov();
  const std::vector<std::uint64_t>& emp_n = cfg.empirical_n;
  for (std::uint64_t n : emp_n) {
    if (std::find(cfg.n_grid.begin(), cfg.n_grid.end(), n) == cfg.n_grid.end()) {
      throw InvalidArgument("lattice_lower_experiment: empirical n = " + std::to_string(n) + " is not on the grid");
    }
  }
  if (!emp_n.empty()) {
    require_estimator_supports(cfg.estimator, d);
    if (cfg.replicas < 1) throw InvalidArgument("lattice_lower_experiment: replicas must be positive");
  }

  const std::size_t proxy_jobs = cfg.n_grid.size();
  const std::size_t jobs = proxy_jobs + emp_n.size() * cfg.replicas;
  std::vector<Estimate> proxies(proxy_jobs);
  std::vector<double> empirical(jobs - proxy_jobs, 0.0);
  Rng dir_rng = make_rng(cfg.root_seed, cfg.stream + "/directions");
  const PointCloud dirs = projection_directions(d, 16, dir_rng);
  const GaussianModel gauss(cov, 1.0);
  run_jobs(jobs, cfg.workers, [&](std::size_t job) {
    Rng rng = make_rng(cfg.root_seed, cfg.stream, job);
    if (job < proxy_jobs) {
      const std::uint64_t n = cfg.n_grid[job];
      const Estimate e = expected_lattice_distance(cov, LatticeSpec::for_clt(beta, n, d), cfg.proxy_m, rng);
      const double root = std::sqrt(static_cast<double>(n));
      proxies[job] = {root * e.value, root * e.se};
      return;
    }
    const std::size_t e = job - proxy_jobs;
    const std::uint64_t n = emp_n[e / cfg.replicas];
    PointCloud sums = draw_normalized_sums(s, n, cfg.m, rng);
    PointCloud z = sample_gaussian(gauss, cfg.m, rng);
    empirical[e] = std::sqrt(static_cast<double>(n)) * estimate_w2(cfg.estimator, sums, z, dirs, 0.01);
  });

  LowerReport rep;
  rep.dim = d;
  rep.beta = beta;
  rep.target = std::sqrt(static_cast<double>(d)) * beta / 4.0;
  rep.cube_average = cube_mean_distance(std::min<std::size_t>(d, 3));
  rep.cube_display_constant = 0.5 * std::sqrt(static_cast<double>(d));
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    LowerPoint p;
    p.n = cfg.n_grid[g];
    p.proxy = proxies[g].value;
    p.proxy_se = proxies[g].se;
    const auto it = std::find(emp_n.begin(), emp_n.end(), p.n);
    if (it != emp_n.end()) {
      const std::size_t e = static_cast<std::size_t>(it - emp_n.begin());
      double sum = 0.0;
      for (std::size_t r = 0; r < cfg.replicas; ++r) {
        p.empirical_replicas.push_back(empirical[e * cfg.replicas + r]);
        sum += empirical[e * cfg.replicas + r];
      }
      p.empirical = sum / static_cast<double>(cfg.replicas);
    }
    rep.points.push_back(std::move(p));
  }
  rep.plateau = rep.points.back().proxy;
  rep.plateau_ok = rep.plateau >= 0.95 * rep.target;
  return rep;
}

HalfspaceDiscrepancy halfspace_discrepancy(const PointCloud& cloud, const CovarianceSpec& cov, const PointCloud& directions) {
  if (cloud.dim() != cov.dim() || directions.dim() != cov.dim()) throw InvalidArgument("halfspace_discrepancy: dimension mismatch");
  if (cloud.empty()) throw InvalidArgument("halfspace_discrepancy: empty cloud");
  const std::size_t m = cloud.size();
  const double dm = static_cast<double>(m);
  HalfspaceDiscrepancy best;
  best.se = 0.5 / std::sqrt(dm);
  std::vector<double> proj(m);
  for (std::size_t k = 0; k < directions.size(); ++k) {
    auto u = directions.point(k);
    double var = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) var += u[j] * u[j] * cov.variance(j);
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < m; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) v += u[j] * cloud(i, j);
      proj[i] = v;
    }
    std::sort(proj.begin(), proj.end());
    std::size_t i = 0;
    while (i < m) {
      std::size_t j = i;
      while (j < m && proj[j] == proj[i]) ++j;
      const double g = normal_cdf(proj[i] / sd);
      const double below = static_cast<double>(i) / dm;   // P_hat(< t)
      const double upto = static_cast<double>(j) / dm;    // P_hat(<= t)
      const double gap = std::max(std::abs(upto - g), std::abs(below - g));
      if (gap > best.delta) {
        best.delta = gap;
        best.direction = k;
        best.threshold = proj[i];
      }
      i = j;
    }
  }
  return best;
}

double w2_to_convex_bound(std::size_t d, double w2) {
  return 5.0 * std::pow(static_cast<double>(d), 1.0 / 6.0) * std::pow(w2, 2.0 / 3.0);
}

CiReport ci_halfspace_experiment(const BoundedSampler& s, std::uint64_t n, std::size_t m, std::size_t directions, Rng& rng) {
  const std::size_t d = s.dim();
  const CovarianceSpec cov = s.cov();
  PointCloud dirs = projection_directions(d, d == 1 ? 0 : directions, rng);
  PointCloud sums = draw_normalized_sums(s, n, m, rng);
  PointCloud z = sample_gaussian(GaussianModel(cov, 1.0), m, rng);
  CiReport rep;
  rep.n = n;
  const HalfspaceDiscrepancy h = halfspace_discrepancy(sums, cov, dirs);
  rep.delta_hat = h.delta;
  rep.se = h.se;
  rep.w2_hat = d == 1 ? w2_quantile_1d(sums.raw(), z.raw()) : w2_exact(EmpiricalMeasure(sums), EmpiricalMeasure(z)).distance();
  rep.rhs = w2_to_convex_bound(d, rep.w2_hat);
  rep.pass = rep.delta_hat <= rep.rhs + 5.0 * rep.se;
  return rep;
}

CiCalibration ci_calibration(double shift) {
  CiCalibration c;
  c.shift = shift;
  c.delta_exact = 2.0 * normal_cdf(0.5 * std::abs(shift)) - 1.0;
  auto gap = [&](double t) { return std::abs(normal_cdf(t) - normal_cdf(t - shift)); };
  double lo = std::min(0.0, shift) - 1.0, hi = std::max(0.0, shift) + 1.0;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    if (gap(a) > gap(b)) {
      hi = b;
      b = a;
      a = hi - phi * (hi - lo);
    } else {
      lo = a;
      a = b;
      b = lo + phi * (hi - lo);
    }
  }
  c.delta_numeric = gap(0.5 * (lo + hi));
  c.w2 = std::abs(shift);
  c.bound = w2_to_convex_bound(1, c.w2);
  c.pass = std::abs(c.delta_numeric - c.delta_exact) <= 1e-10 && c.delta_numeric <= c.bound;
  return c;
}

double bentkus_reference_curve(std::size_t d, std::uint64_t n, double beta3) {
  if (n < 1) throw InvalidArgument("bentkus_reference_curve: n must be positive");
  return std::pow(static_cast<double>(d), 0.25) * beta3 * beta3 * beta3 / std::sqrt(static_cast<double>(n));
}

}  // namespace w2lab
