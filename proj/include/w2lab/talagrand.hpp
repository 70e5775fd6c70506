#pragma once

// Numerical evaluation of the chain
//   W2(Y, Z)^2 <= 2 sum_k sigma_k^2 E(f_[k] log f_[k] - f_[k-1] log f_[k-1])
//             <= 2 sum_i sigma_i^2 (E f^2 - E f_(i)^2)
// for Gaussian-mixture laws Y against Z ~ N(0, diag(sigma^2)), d in {1, 2}.

#include <cstddef>
#include <vector>

#include "w2lab/density_ratio.hpp"
#include "w2lab/verdict.hpp"

namespace w2lab {

struct TalagrandChainReport {
  std::size_t dim = 0;
  /// Cost of the Knothe-Rosenblatt coupling (coordinate 1 monotone, then each
  /// later coordinate monotone given the earlier ones). It is an upper bound on
  /// W2^2 and equals it for d = 1.
  double w2_sq = 0.0;
  /// Sum of the one-dimensional marginal W2^2: a lower bound on W2^2.
  double w2_sq_lower = 0.0;
  double rhs_entropy = 0.0;
  double rhs_chi2 = 0.0;

  /// Discretization budgets (two-resolution differences plus clamp mass).
  double budget_w2 = 0.0;
  double budget_entropy = 0.0;
  double budget_chi2 = 0.0;
  double mass_loss = 0.0;

  std::vector<double> entropy_terms;    // E f_[k] log f_[k], k = 1..d
  std::vector<double> prefix_second;    // E f_[k]^2, k = 0..d
  std::vector<double> averaged_second;  // E f_(i)^2, i = 1..d
  double second_moment = 0.0;           // E f^2

  VerdictStatus w2_vs_entropy = VerdictStatus::inconclusive;
  VerdictStatus entropy_vs_chi2 = VerdictStatus::inconclusive;
  double margin_w2_entropy = 0.0;   // rhs_entropy - w2_sq
  double margin_entropy_chi2 = 0.0; // rhs_chi2 - rhs_entropy
  /// E f_[k]^2 - E f_[k-1]^2 <= E f^2 - E f_(k)^2 and monotone prefix moments, for every k
  bool conditional_bound_holds = false;

  VerdictStatus status() const;
  Json to_json() const;
};

/// Evaluates the chain by tensor Gauss-Hermite quadrature under the mixture law.
/// Requires reference standard deviations in non-increasing order and d in {1, 2}.
/// Throws InconclusiveError when the two quadrature resolutions disagree and
/// DivergenceError when E f(Z)^2 is infinite.
TalagrandChainReport talagrand_chain(const GaussianMixtureRatio& m);
TalagrandChainReport talagrand_chain(const DensityRatioModel& model);

/// Squared W2 between the one-dimensional mixture and its Gaussian reference,
/// through the exact quantile coupling.
double mixture_w2_sq_1d(const GaussianMixtureRatio& m, const NormalQuadrature& rule, double* mass_loss);

}  // namespace w2lab
