#include "w2lab/density_ratio.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "w2lab/q_stats.hpp"

namespace w2lab {

namespace {

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

constexpr std::size_t kCoarseNodes = kQuadratureNodes / 2;
constexpr std::size_t kMaxQuadratureDim = 3;

template <class Integral>
QuadratureValue two_resolutions(Integral&& integral, double rel_tol, const char* what) {
  double loss_fine = 0.0, loss_coarse = 0.0;
  const double fine = integral(normal_quadrature(kQuadratureNodes), &loss_fine);
  const double coarse = integral(normal_quadrature(kCoarseNodes), &loss_coarse);
  QuadratureValue out{fine, std::abs(fine - coarse), loss_fine};
  if (!std::isfinite(fine) || out.richardson_error > rel_tol * std::max(1.0, std::abs(fine))) {
    throw InconclusiveError(std::string(what) + ": quadrature resolutions disagree (" + std::to_string(fine) + " vs " +
                            std::to_string(coarse) + ")");
  }
  return out;
}

}  // namespace

GaussianMixtureRatio::GaussianMixtureRatio(std::size_t dim, std::vector<double> means, std::vector<double> weights,
                                           std::vector<double> component_sd, std::vector<double> reference_sd)
    : dim_(dim),
      means_(std::move(means)),
      weights_(std::move(weights)),
      component_sd_(std::move(component_sd)),
      reference_sd_(std::move(reference_sd)) {
  if (weights_.empty()) throw InvalidArgument("GaussianMixtureRatio: at least one component required");
  if (means_.size() != dim_ * weights_.size()) throw InvalidArgument("GaussianMixtureRatio: means size mismatch");
  if (component_sd_.size() != dim_ || reference_sd_.size() != dim_) {
    throw InvalidArgument("GaussianMixtureRatio: standard deviation size mismatch");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw InvalidArgument("GaussianMixtureRatio: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("GaussianMixtureRatio: weights must sum to 1");
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!(component_sd_[i] > 0.0) || !(reference_sd_[i] > 0.0)) {
      throw InvalidArgument("GaussianMixtureRatio: standard deviations must be positive");
    }
    log_norm_ratio_ += std::log(reference_sd_[i] / component_sd_[i]);
  }
  log_weights_.resize(weights_.size());
  for (std::size_t a = 0; a < weights_.size(); ++a) log_weights_[a] = std::log(weights_[a]);
}

GaussianMixtureRatio GaussianMixtureRatio::gaussian(std::vector<double> mean, std::vector<double> sd,
                                                    std::vector<double> reference_sd) {
  const std::size_t d = mean.size();
  return GaussianMixtureRatio(d, std::move(mean), {1.0}, std::move(sd), std::move(reference_sd));
}

double GaussianMixtureRatio::log_ratio(std::span<const double> x) const {
  if (x.size() < dim_) throw InvalidArgument("GaussianMixtureRatio: point dimension too small");
  if (dim_ == 0) return 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) ref += x[i] * x[i] / (2.0 * reference_sd_[i] * reference_sd_[i]);
  thread_local std::vector<double> terms;
  terms.resize(weights_.size());
  for (std::size_t a = 0; a < weights_.size(); ++a) {
    const double* mu = means_.data() + a * dim_;
    double e = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double z = (x[i] - mu[i]) / component_sd_[i];
      e -= 0.5 * z * z;
    }
    terms[a] = log_weights_[a] + e;
  }
  return log_sum_exp(terms) + log_norm_ratio_ + ref;
}

double GaussianMixtureRatio::log_reference_density(std::span<const double> x) const {
  double s = -0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double z = x[i] / reference_sd_[i];
    s -= 0.5 * z * z + std::log(reference_sd_[i]);
  }
  return s;
}

double GaussianMixtureRatio::log_density(std::span<const double> x) const {
  return log_ratio(x) + log_reference_density(x);
}

GaussianMixtureRatio GaussianMixtureRatio::project(std::span<const std::size_t> coords) const {
  const std::size_t k = coords.size();
  std::vector<double> means(k * weights_.size()), sd(k), ref(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (coords[j] >= dim_) throw InvalidArgument("GaussianMixtureRatio::project: coordinate out of range");
    sd[j] = component_sd_[coords[j]];
    ref[j] = reference_sd_[coords[j]];
  }
  for (std::size_t a = 0; a < weights_.size(); ++a) {
    for (std::size_t j = 0; j < k; ++j) means[a * k + j] = means_[a * dim_ + coords[j]];
  }
  return GaussianMixtureRatio(k, std::move(means), weights_, std::move(sd), std::move(ref));
}

GaussianMixtureRatio GaussianMixtureRatio::head(std::size_t k) const {
  if (k > dim_) throw InvalidArgument("GaussianMixtureRatio::head: k exceeds dimension");
  std::vector<std::size_t> coords(k);
  for (std::size_t j = 0; j < k; ++j) coords[j] = j;
  return project(coords);
}

GaussianMixtureRatio GaussianMixtureRatio::drop(std::size_t i) const {
  if (i >= dim_) throw InvalidArgument("GaussianMixtureRatio::drop: coordinate out of range");
  std::vector<std::size_t> coords;
  for (std::size_t j = 0; j < dim_; ++j) {
    if (j != i) coords.push_back(j);
  }
  return project(coords);
}

double quadrature_clamp_radius(std::size_t dim) { return 8.0 * std::sqrt(static_cast<double>(dim)); }

namespace {

GaussianMixtureRatio model_ratio(const Support& ys, std::uint64_t n, const CovarianceSpec& cov) {
  const std::size_t d = cov.dim();
  const double shrink = std::sqrt(1.0 - 1.0 / static_cast<double>(n));
  std::vector<double> sd(d), ref(d);
  for (std::size_t i = 0; i < d; ++i) {
    ref[i] = cov.sigma(i);
    sd[i] = shrink * cov.sigma(i);
  }
  return GaussianMixtureRatio(d, ys.points.raw(), ys.prob, std::move(sd), std::move(ref));
}

Support scaled(const Support& x, std::uint64_t n) {
  Support out;
  out.prob = x.prob;
  std::vector<double> coords = x.points.raw();
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  for (double& c : coords) c *= inv;
  out.points = PointCloud(x.points.dim(), std::move(coords));
  return out;
}

Support require_support(const BoundedSampler& s) {
  if (!s.enumerable()) throw PreconditionError("DensityRatioModel: sampler support must be enumerable");
  return *s.support();
}

}  // namespace

DensityRatioModel::DensityRatioModel(const BoundedSampler& s, std::uint64_t n)
    : DensityRatioModel(require_support(s), n, s.cov()) {}

DensityRatioModel::DensityRatioModel(const Support& x_support, std::uint64_t n, CovarianceSpec cov)
    : n_(n),
      cov_(std::move(cov)),
      y_support_(n >= 2 ? scaled(align_support(x_support, cov_), n) : Support{}),
      ratio_(n >= 2 ? model_ratio(y_support_, n, cov_) : GaussianMixtureRatio::gaussian({}, {}, {})) {
  if (n < 2) throw InvalidArgument("DensityRatioModel: n must be at least 2");
}

double DensityRatioModel::rho(std::span<const double> x) const { return std::exp(ratio_.log_reference_density(x)); }

double DensityRatioModel::tau(std::span<const double> x) const { return std::exp(ratio_.log_density(x)); }

double DensityRatioModel::f_averaged(std::size_t i, std::span<const double> x) const {
  if (x.size() != cov_.dim()) throw InvalidArgument("f_averaged: dimension mismatch");
  std::vector<double> rest;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j != i) rest.push_back(x[j]);
  }
  return ratio_.drop(i).ratio(rest);
}

double DensityRatioModel::f_prefix(std::size_t k, std::span<const double> x) const {
  if (x.size() < k) throw InvalidArgument("f_prefix: point has fewer than k coordinates");
  return ratio_.head(k).ratio(x.first(k));
}

QuadratureValue ratio_second_moment(const GaussianMixtureRatio& m) {
  if (m.dim() > kMaxQuadratureDim) throw InvalidArgument("ratio_second_moment: tensor quadrature limited to d <= 3");
  for (std::size_t i = 0; i < m.dim(); ++i) {
    if (m.component_sd()[i] * m.component_sd()[i] >= 2.0 * m.reference_sd()[i] * m.reference_sd()[i]) {
      throw DivergenceError("ratio_second_moment: E f(Z)^2 diverges (component variance >= twice the reference variance)");
    }
  }
  return two_resolutions(
      [&](const NormalQuadrature& rule, double* loss) {
        return reference_expectation(m, rule, [&](std::span<const double> x) { return std::exp(2.0 * m.log_ratio(x)); }, loss);
      },
      1e-9, "ratio_second_moment");
}

QuadratureValue ratio_first_moment(const GaussianMixtureRatio& m) {
  if (m.dim() > kMaxQuadratureDim) throw InvalidArgument("ratio_first_moment: tensor quadrature limited to d <= 3");
  return two_resolutions(
      [&](const NormalQuadrature& rule, double* loss) {
        return reference_expectation(m, rule, [&](std::span<const double> x) { return m.ratio(x); }, loss);
      },
      1e-9, "ratio_first_moment");
}

QuadratureValue density_second_moment_lhs(const DensityRatioModel& model) {
  if (model.cov().dim() > 2) throw InvalidArgument("density_second_moment_lhs: d <= 2 required");
  return ratio_second_moment(model.ratio());
}

QuadratureValue averaged_second_moment_quadrature(const DensityRatioModel& model, std::size_t i) {
  if (model.cov().dim() > 2) throw InvalidArgument("averaged_second_moment_quadrature: d <= 2 required");
  return ratio_second_moment(model.ratio().drop(i));
}

}  // namespace w2lab
