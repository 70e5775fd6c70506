#pragma once

// Bounded, mean-zero random-vector families: the hypotheses of the W2 CLT
// (mean zero, covariance Sigma, ||X|| <= beta almost surely).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "w2lab/gaussmath.hpp"
#include "w2lab/point_cloud.hpp"
#include "w2lab/rng.hpp"

namespace w2lab {

enum class SamplerKind { rademacher_product, scaled_basis, lattice_custom, sphere_uniform };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

/// Finite support with probabilities (exact enumeration).
struct Support {
  PointCloud points;
  std::vector<double> prob;
};

/// Largest support the samplers will enumerate explicitly.
inline constexpr std::size_t kMaxEnumeratedSupport = std::size_t{1} << 16;

class BoundedSampler {
 public:
  SamplerKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  /// Declared almost-sure bound beta on ||X||.
  double bound() const noexcept { return bound_; }
  /// Diagonal of E X X^T; off-diagonal entries are zero for every family.
  const std::vector<double>& second_moments() const noexcept { return second_moments_; }
  /// Covariance as a CovarianceSpec; throws InvalidArgument if some variance vanishes.
  CovarianceSpec cov() const;
  /// E X_i^2 X_j^2 (row-major d x d), exact for every family.
  const std::vector<double>& fourth_cross_moments() const noexcept { return fourth_; }

  const std::optional<Support>& support() const noexcept { return support_; }
  bool enumerable() const noexcept { return support_.has_value(); }

  void draw_into(std::span<double> out, Rng& rng) const;
  Vector draw(Rng& rng) const;
  /// X_1 + ... + X_n for i.i.d. copies; lattice families use exact multinomial counts.
  Vector draw_sum(std::size_t n, Rng& rng) const;
  void draw_sum_into(std::size_t n, std::span<double> out, Rng& rng) const;

  /// True when every support point lies in spacing * Z^d (to 1e-12 relative).
  bool lattice_valued(double spacing) const;

  /// Copy with a different declared bound (no re-validation; used to exercise error paths).
  BoundedSampler with_declared_bound(double beta) const;

  std::string describe() const;

  static BoundedSampler rademacher_product(std::size_t d, double scale);
  static BoundedSampler scaled_basis(std::size_t d, double beta);
  static BoundedSampler sphere_uniform(std::size_t d, double beta);
  /// Explicit finite support. Must be mean zero with diagonal second moments;
  /// coordinates are reordered so variances are non-increasing.
  /// beta defaults to the largest support norm.
  static BoundedSampler lattice_custom(PointCloud points, std::vector<double> prob,
                                       std::optional<double> beta = std::nullopt);

 private:
  BoundedSampler() = default;
  void finish_from_support();

  SamplerKind kind_ = SamplerKind::rademacher_product;
  std::size_t dim_ = 0;
  double bound_ = 0.0;
  double scale_ = 0.0;
  std::vector<double> second_moments_;
  std::vector<double> fourth_;
  std::optional<Support> support_;
  std::vector<double> cumulative_;  // for lattice_custom draws
  std::vector<std::size_t> coordinate_permutation_;
};

struct ValidationReport {
  std::size_t draws = 0;
  double max_norm = 0.0;
  Vector mean;
  Vector mean_se;
  /// max_ij |empirical E X_i X_j - declared|
  double cov_max_deviation = 0.0;
  /// max_ij of that deviation in standard-error units
  double cov_max_z = 0.0;
  double mean_max_z = 0.0;
};

/// Draws m samples, checks ||X|| <= beta + 1e-12 for every one (InvariantViolation otherwise)
/// and reports mean / covariance agreement.
ValidationReport validate_sampler(const BoundedSampler& s, std::size_t m, Rng& rng);

/// Lattice spacing * Z^d.
struct LatticeSpec {
  double spacing = 1.0;
  std::size_t dim = 1;

  LatticeSpec(double spacing_, std::size_t dim_);
  /// l_n = beta / sqrt(n): the lattice containing S_n for beta Z^d valued summands.
  static LatticeSpec for_clt(double beta, std::size_t n, std::size_t dim);
};

/// Euclidean distance from x to the nearest lattice point.
double lattice_distance(std::span<const double> x, const LatticeSpec& spec);

/// Throws PreconditionError unless the support lies in beta Z^d.
void require_lattice_support(const BoundedSampler& s);

}  // namespace w2lab
