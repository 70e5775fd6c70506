#include "w2lab/gaussmath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

namespace w2lab {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(got) + " vs " +
                          std::to_string(want) + ")");
  }
}

}  // namespace

CovarianceSpec::CovarianceSpec(std::vector<double> sigmas) {
  if (sigmas.empty()) throw InvalidArgument("CovarianceSpec: dimension must be positive");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("CovarianceSpec: every sigma must be positive and finite");
  }
  permutation_.resize(sigmas.size());
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  std::stable_sort(permutation_.begin(), permutation_.end(),
                   [&](std::size_t a, std::size_t b) { return sigmas[a] > sigmas[b]; });
  sigmas_.resize(sigmas.size());
  for (std::size_t k = 0; k < sigmas.size(); ++k) sigmas_[k] = sigmas[permutation_[k]];
}

CovarianceSpec CovarianceSpec::isotropic(std::size_t dim, double sigma) {
  return CovarianceSpec(std::vector<double>(dim, sigma));
}

CovarianceSpec CovarianceSpec::from_variances(std::span<const double> variances) {
  std::vector<double> s(variances.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(variances[i] > 0.0)) throw InvalidArgument("CovarianceSpec: variances must be positive");
    s[i] = std::sqrt(variances[i]);
  }
  return CovarianceSpec(std::move(s));
}

double CovarianceSpec::trace() const noexcept {
  double t = 0.0;
  for (double s : sigmas_) t += s * s;
  return t;
}

bool CovarianceSpec::is_sorted_input() const noexcept {
  for (std::size_t k = 0; k < permutation_.size(); ++k) {
    if (permutation_[k] != k) return false;
  }
  return true;
}

CovarianceSpec CovarianceSpec::head(std::size_t k) const {
  if (k == 0 || k > dim()) throw InvalidArgument("CovarianceSpec::head: k out of range");
  return CovarianceSpec(std::vector<double>(sigmas_.begin(), sigmas_.begin() + static_cast<long>(k)));
}

CovarianceSpec CovarianceSpec::drop(std::size_t i) const {
  if (dim() < 2 || i >= dim()) throw InvalidArgument("CovarianceSpec::drop: index out of range");
  std::vector<double> s;
  for (std::size_t k = 0; k < dim(); ++k) {
    if (k != i) s.push_back(sigmas_[k]);
  }
  return CovarianceSpec(std::move(s));
}

GaussianModel::GaussianModel(CovarianceSpec c, double t) : cov(std::move(c)), time_scale(t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("GaussianModel: time scale must be positive");
}

Diagonalization diagonalize_spd(std::span<const double> matrix, std::size_t dim) {
  if (dim == 0 || matrix.size() != dim * dim) throw InvalidArgument("diagonalize_spd: expected a square row-major matrix");
  Eigen::MatrixXd a(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) a(i, j) = matrix[i * dim + j];
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw InvalidArgument("diagonalize_spd: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw InvalidArgument("diagonalize_spd: eigen-decomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();
  std::vector<double> sigmas(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!(evals(static_cast<long>(i)) > 0.0)) throw InvalidArgument("diagonalize_spd: matrix is not positive definite");
    sigmas[i] = std::sqrt(evals(static_cast<long>(i)));
  }
  CovarianceSpec cov(sigmas);
  std::vector<double> rotation(dim * dim);
  for (std::size_t col = 0; col < dim; ++col) {
    const long src = static_cast<long>(cov.permutation()[col]);
    for (std::size_t row = 0; row < dim; ++row) rotation[row * dim + col] = solver.eigenvectors()(static_cast<long>(row), src);
  }
  return {std::move(cov), std::move(rotation)};
}

double weighted_inner(std::span<const double> u, std::span<const double> v, const CovarianceSpec& cov) {
  require_dim(u.size(), cov.dim(), "weighted_inner");
  require_dim(v.size(), cov.dim(), "weighted_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i] / cov.variance(i);
  return s;
}

double weighted_norm_sq(std::span<const double> u, const CovarianceSpec& cov) { return weighted_inner(u, u, cov); }

double weighted_norm(std::span<const double> u, const CovarianceSpec& cov) { return std::sqrt(weighted_norm_sq(u, cov)); }

double gaussian_log_density(std::span<const double> x, const CovarianceSpec& cov) {
  require_dim(x.size(), cov.dim(), "gaussian_log_density");
  double log_det = 0.0;
  for (double s : cov.sigmas()) log_det += 2.0 * std::log(s);
  const double k = static_cast<double>(cov.dim());
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det) - 0.5 * weighted_norm_sq(x, cov);
}

double gaussian_density(std::span<const double> x, const CovarianceSpec& cov) {
  return std::exp(gaussian_log_density(x, cov));
}

PointCloud sample_gaussian(const GaussianModel& model, std::size_t count, Rng& rng) {
  if (count == 0) throw InvalidArgument("sample_gaussian: count must be at least 1");
  const std::size_t d = model.cov.dim();
  PointCloud cloud(d, count);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double root_t = std::sqrt(model.time_scale);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) cloud(i, j) = root_t * model.cov.sigma(j) * normal(rng);
  }
  return cloud;
}

double gaussian_exp_quadratic(double a, double b, std::span<const double> v, const CovarianceSpec& cov) {
  require_dim(v.size(), cov.dim(), "gaussian_exp_quadratic");
  if (!(1.0 - 2.0 * a > 0.0)) {
    throw DivergenceError("gaussian_exp_quadratic: integral diverges for a >= 1/2 (a = " + std::to_string(a) + ")");
  }
  const double k = static_cast<double>(cov.dim());
  const double vv = weighted_norm_sq(v, cov);
  return std::exp(b * b * vv / (2.0 - 4.0 * a) - 0.5 * k * std::log1p(-2.0 * a));
}

double w2_gaussian_diag(const CovarianceSpec& cov1, const CovarianceSpec& cov2, double t1, double t2) {
  require_dim(cov1.dim(), cov2.dim(), "w2_gaussian_diag");
  if (!(t1 >= 0.0) || !(t2 >= 0.0)) throw InvalidArgument("w2_gaussian_diag: time scales must be non-negative");
  const double r1 = std::sqrt(t1), r2 = std::sqrt(t2);
  double s = 0.0;
  for (std::size_t i = 0; i < cov1.dim(); ++i) {
    const double diff = r1 * cov1.sigma(i) - r2 * cov2.sigma(i);
    s += diff * diff;
  }
  return std::sqrt(s);
}

double normal_cdf(double z) { return 0.5 * boost::math::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * boost::math::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw InvalidArgument("normal_quantile: probability outside [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_isf(double q) { return -normal_quantile(q); }

}  // namespace w2lab
