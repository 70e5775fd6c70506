#pragma once

// Diagonal-covariance Gaussian geometry: Sigma^{-1}-weighted inner products,
// sampling of N(0, t Sigma), and closed forms used by the density-ratio
// machinery.

#include <cstddef>
#include <span>
#include <vector>

#include "w2lab/point_cloud.hpp"
#include "w2lab/rng.hpp"

namespace w2lab {

/// Diagonal covariance diag(sigma_1^2, ..., sigma_d^2) with sigma_1 >= ... >= sigma_d > 0.
/// Construction sorts the standard deviations into non-increasing order;
/// permutation()[k] is the index (in the caller's order) of the k-th stored entry.
class CovarianceSpec {
 public:
  explicit CovarianceSpec(std::vector<double> sigmas);

  static CovarianceSpec isotropic(std::size_t dim, double sigma);
  static CovarianceSpec from_variances(std::span<const double> variances);

  std::size_t dim() const noexcept { return sigmas_.size(); }
  double sigma(std::size_t i) const { return sigmas_[i]; }
  double variance(std::size_t i) const { return sigmas_[i] * sigmas_[i]; }
  double sigma_min() const noexcept { return sigmas_.back(); }
  double trace() const noexcept;
  const std::vector<double>& sigmas() const noexcept { return sigmas_; }
  const std::vector<std::size_t>& permutation() const noexcept { return permutation_; }
  bool is_sorted_input() const noexcept;

  /// Leading k coordinates (the projection P_k).
  CovarianceSpec head(std::size_t k) const;
  /// All coordinates except i.
  CovarianceSpec drop(std::size_t i) const;

 private:
  std::vector<double> sigmas_;
  std::vector<std::size_t> permutation_;
};

/// Z_t ~ N(0, t Sigma); time_scale = 1 is the reference Gaussian.
struct GaussianModel {
  CovarianceSpec cov;
  double time_scale = 1.0;

  GaussianModel(CovarianceSpec c, double t);
};

/// Result of rotating a symmetric positive-definite matrix to diagonal form.
struct Diagonalization {
  CovarianceSpec cov;
  /// Row-major d x d orthogonal matrix R with R^T A R = diag(cov); columns
  /// follow the stored (descending) order.
  std::vector<double> rotation;
};

/// Eigen-decomposes a row-major SPD matrix. Throws InvalidArgument when the
/// matrix is not square, not symmetric, or not positive definite.
Diagonalization diagonalize_spd(std::span<const double> matrix, std::size_t dim);

double weighted_inner(std::span<const double> u, std::span<const double> v, const CovarianceSpec& cov);
double weighted_norm(std::span<const double> u, const CovarianceSpec& cov);
double weighted_norm_sq(std::span<const double> u, const CovarianceSpec& cov);

/// Density of N(0, Sigma) at x.
double gaussian_density(std::span<const double> x, const CovarianceSpec& cov);
double gaussian_log_density(std::span<const double> x, const CovarianceSpec& cov);

/// count i.i.d. draws of N(0, t Sigma).
PointCloud sample_gaussian(const GaussianModel& model, std::size_t count, Rng& rng);

/// E exp(a ||Z||^2_{Sigma^-1} + b <Z, v>_{Sigma^-1}) for Z ~ N(0, Sigma):
///   exp(b^2 ||v||^2 / (2 - 4a)) (1 - 2a)^{-k/2}.
/// Throws DivergenceError when a >= 1/2.
double gaussian_exp_quadratic(double a, double b, std::span<const double> v, const CovarianceSpec& cov);

/// W2 between N(0, t1 diag(sigma^2)) and N(0, t2 diag(tau^2)) (commuting covariances).
double w2_gaussian_diag(const CovarianceSpec& cov1, const CovarianceSpec& cov2, double t1, double t2);

/// Standard normal CDF / survival / quantile.
double normal_cdf(double z);
double normal_sf(double z);
double normal_quantile(double p);
/// Upper-tail quantile: z with P(G > z) = q, accurate for tiny q.
double normal_isf(double q);

}  // namespace w2lab
