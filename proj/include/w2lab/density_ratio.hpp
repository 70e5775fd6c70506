#pragma once

// The density ratio f = tau / rho of Z_{1-1/n} + Y against Z ~ N(0, Sigma),
// evaluated through its Gaussian-mixture representation, with coordinate and
// prefix averagings obtained exactly from projected mixtures.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "w2lab/gaussmath.hpp"
#include "w2lab/quadrature.hpp"
#include "w2lab/samplers.hpp"

namespace w2lab {

/// Ratio of sum_a p_a N(mu_a, diag(s^2)) against N(0, diag(sigma^2)).
/// A zero-dimensional mixture is allowed and has ratio identically 1.
class GaussianMixtureRatio {
 public:
  GaussianMixtureRatio(std::size_t dim, std::vector<double> means, std::vector<double> weights,
                       std::vector<double> component_sd, std::vector<double> reference_sd);

  /// One component N(mean, diag(sd^2)) against N(0, diag(reference_sd^2)).
  static GaussianMixtureRatio gaussian(std::vector<double> mean, std::vector<double> sd, std::vector<double> reference_sd);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t components() const noexcept { return weights_.size(); }
  std::span<const double> mean(std::size_t a) const { return {means_.data() + a * dim_, dim_}; }
  double weight(std::size_t a) const { return weights_[a]; }
  const std::vector<double>& component_sd() const noexcept { return component_sd_; }
  const std::vector<double>& reference_sd() const noexcept { return reference_sd_; }

  double log_ratio(std::span<const double> x) const;
  double ratio(std::span<const double> x) const { return std::exp(log_ratio(x)); }
  double log_density(std::span<const double> x) const;
  double log_reference_density(std::span<const double> x) const;

  /// Marginal on the listed coordinates (in the given order).
  GaussianMixtureRatio project(std::span<const std::size_t> coords) const;
  /// First k coordinates: the prefix averaging f_[k].
  GaussianMixtureRatio head(std::size_t k) const;
  /// All coordinates except i: the coordinate averaging f_(i).
  GaussianMixtureRatio drop(std::size_t i) const;

 private:
  std::size_t dim_;
  std::vector<double> means_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> component_sd_;
  std::vector<double> reference_sd_;
  double log_norm_ratio_ = 0.0;  // sum_i log(sigma_i / s_i)
};

/// Radius, in per-axis standard units, beyond which tensor nodes are dropped.
double quadrature_clamp_radius(std::size_t dim);

/// Tensor Gauss-Hermite expectation of g under N(mu, diag(sd^2)), nodes with
/// ||h|| > clamp dropped; the dropped reference mass is added to *mass_loss.
template <class G>
double tensor_normal_expectation(std::span<const double> mu, std::span<const double> sd, const NormalQuadrature& rule,
                                 double clamp, G&& g, double* mass_loss) {
  const std::size_t d = mu.size();
  if (d == 0) {
    std::vector<double> empty;
    return g(std::span<const double>(empty));
  }
  const std::size_t q = rule.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  double total = 0.0, dropped = 0.0;
  const double clamp_sq = clamp * clamp;
  while (true) {
    double w = 1.0, h2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = rule.node[idx[j]];
      w *= rule.weight[idx[j]];
      h2 += h * h;
      x[j] = mu[j] + sd[j] * h;
    }
    if (h2 <= clamp_sq) total += w * g(std::span<const double>(x));
    else dropped += w;
    std::size_t j = 0;
    while (j < d && ++idx[j] == q) idx[j++] = 0;
    if (j == d) break;
  }
  if (mass_loss) *mass_loss += dropped;
  return total;
}

/// E g(Y) for Y distributed as the mixture (numerator) law.
template <class G>
double mixture_expectation(const GaussianMixtureRatio& m, const NormalQuadrature& rule, G&& g, double* mass_loss) {
  const double clamp = quadrature_clamp_radius(m.dim());
  double total = 0.0;
  for (std::size_t a = 0; a < m.components(); ++a) {
    double loss = 0.0;
    total += m.weight(a) * tensor_normal_expectation(m.mean(a), m.component_sd(), rule, clamp, g, &loss);
    if (mass_loss) *mass_loss += m.weight(a) * loss;
  }
  return total;
}

/// E g(Z) for Z ~ N(0, diag(reference_sd^2)).
template <class G>
double reference_expectation(const GaussianMixtureRatio& m, const NormalQuadrature& rule, G&& g, double* mass_loss) {
  std::vector<double> zero(m.dim(), 0.0);
  return tensor_normal_expectation(zero, m.reference_sd(), rule, quadrature_clamp_radius(m.dim()), g, mass_loss);
}

/// Law of Z_{1-1/n} + Y, Y = X/sqrt(n), against Z ~ N(0, Sigma).
class DensityRatioModel {
 public:
  DensityRatioModel(const BoundedSampler& s, std::uint64_t n);
  /// Explicit support of X; coordinates are aligned to the sorted order of cov.
  DensityRatioModel(const Support& x_support, std::uint64_t n, CovarianceSpec cov);

  std::uint64_t n() const noexcept { return n_; }
  const CovarianceSpec& cov() const noexcept { return cov_; }
  /// Support of Y = X / sqrt(n) in the stored coordinate order.
  const Support& y_support() const noexcept { return y_support_; }
  const GaussianMixtureRatio& ratio() const noexcept { return ratio_; }

  double rho(std::span<const double> x) const;
  double tau(std::span<const double> x) const;
  double f(std::span<const double> x) const { return ratio_.ratio(x); }
  /// f_(i)(x); the i-th coordinate of x is ignored.
  double f_averaged(std::size_t i, std::span<const double> x) const;
  /// f_[k](x); only the first k coordinates of x are used.
  double f_prefix(std::size_t k, std::span<const double> x) const;

 private:
  std::uint64_t n_;
  CovarianceSpec cov_;
  Support y_support_;
  GaussianMixtureRatio ratio_;
};

struct QuadratureValue {
  double value = 0.0;
  /// |I(200 nodes) - I(100 nodes)|
  double richardson_error = 0.0;
  /// reference mass outside the clamp radius
  double mass_loss = 0.0;
};

/// E f(Z)^2 by tensor quadrature of f^2 against rho in the Z coordinates.
/// Also used for f_(i) and f_[k] through projected mixtures.
/// Throws InconclusiveError when the two resolutions disagree by more than 1e-9 relative.
QuadratureValue ratio_second_moment(const GaussianMixtureRatio& m);
/// E f(Z) (normalization; 1 up to quadrature error).
QuadratureValue ratio_first_moment(const GaussianMixtureRatio& m);

/// E f(Z)^2 for the model, d <= 2.
QuadratureValue density_second_moment_lhs(const DensityRatioModel& model);
/// E f_(i)(Z)^2 by quadrature of the coordinate-averaged integrand, i zero-based.
QuadratureValue averaged_second_moment_quadrature(const DensityRatioModel& model, std::size_t i);

}  // namespace w2lab
