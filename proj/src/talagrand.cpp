#include "w2lab/talagrand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace w2lab {

namespace {

constexpr std::size_t kCoarse = kQuadratureNodes / 2;
constexpr double kRelativeResolution = 1e-6;

// Knothe-Rosenblatt transport cost: sum over coordinates of (y_k - T_k(y))^2,
// T_k the monotone map from the conditional law of y_k given y_<k onto
// N(0, sigma_k^2). The target is a product measure, so its conditionals do not
// depend on the earlier coordinates.
double kr_cost(const GaussianMixtureRatio& m, const NormalQuadrature& rule, double* mass_loss) {
  const std::size_t d = m.dim(), comps = m.components();
  const auto& s = m.component_sd();
  const auto& sigma = m.reference_sd();
  std::vector<double> logw(comps), w(comps);
  auto integrand = [&](std::span<const double> y) {
    for (std::size_t a = 0; a < comps; ++a) logw[a] = std::log(m.weight(a));
    double cost = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < comps; ++a) mx = std::max(mx, logw[a]);
      double norm = 0.0;
      for (std::size_t a = 0; a < comps; ++a) {
        w[a] = std::exp(logw[a] - mx);
        norm += w[a];
      }
      double cdf = 0.0, sf = 0.0;
      for (std::size_t a = 0; a < comps; ++a) {
        const double z = (y[k] - m.mean(a)[k]) / s[k];
        cdf += w[a] / norm * normal_cdf(z);
        sf += w[a] / norm * normal_sf(z);
        logw[a] -= 0.5 * z * z;
      }
      if (!(cdf > 0.0) || !(sf > 0.0)) throw InconclusiveError("talagrand_chain: conditional tail underflow");
      const double target = sigma[k] * (cdf <= 0.5 ? normal_quantile(cdf) : normal_isf(sf));
      const double diff = y[k] - target;
      cost += diff * diff;
    }
    return cost;
  };
  return mixture_expectation(m, rule, integrand, mass_loss);
}

double entropy_term(const GaussianMixtureRatio& m, const NormalQuadrature& rule, double* mass_loss) {
  if (m.dim() == 0) return 0.0;
  return mixture_expectation(m, rule, [&](std::span<const double> y) { return m.log_ratio(y); }, mass_loss);
}

// E f(Z)^2 = E_tau f(Y).
double chi_term(const GaussianMixtureRatio& m, const NormalQuadrature& rule, double* mass_loss) {
  if (m.dim() == 0) return 1.0;
  return mixture_expectation(m, rule, [&](std::span<const double> y) { return m.ratio(y); }, mass_loss);
}

struct Resolved {
  double value = 0.0;
  double diff = 0.0;
};

template <class F>
Resolved resolve(F&& f, double& mass_loss, const char* what) {
  double loss_fine = 0.0, loss_coarse = 0.0;
  const double fine = f(normal_quadrature(kQuadratureNodes), &loss_fine);
  const double coarse = f(normal_quadrature(kCoarse), &loss_coarse);
  mass_loss = std::max(mass_loss, loss_fine);
  const double diff = std::abs(fine - coarse);
  if (!std::isfinite(fine) || diff > kRelativeResolution * std::abs(fine) + 1e-12) {
    throw InconclusiveError(std::string("talagrand_chain: ") + what + " not resolved by quadrature (" + std::to_string(fine) +
                            " vs " + std::to_string(coarse) + ")");
  }
  return {fine, diff};
}

}  // namespace

double mixture_w2_sq_1d(const GaussianMixtureRatio& m, const NormalQuadrature& rule, double* mass_loss) {
  if (m.dim() != 1) throw InvalidArgument("mixture_w2_sq_1d: one-dimensional mixture required");
  return kr_cost(m, rule, mass_loss);
}

VerdictStatus TalagrandChainReport::status() const {
  if (w2_vs_entropy == VerdictStatus::fail || entropy_vs_chi2 == VerdictStatus::fail) return VerdictStatus::fail;
  if (w2_vs_entropy == VerdictStatus::pass && entropy_vs_chi2 == VerdictStatus::pass) return VerdictStatus::pass;
  return VerdictStatus::inconclusive;
}

Json TalagrandChainReport::to_json() const {
  Json j;
  j["dim"] = dim;
  j["w2_sq"] = w2_sq;
  j["w2_sq_lower"] = w2_sq_lower;
  j["rhs_entropy"] = rhs_entropy;
  j["rhs_chi2"] = rhs_chi2;
  j["budget_w2"] = budget_w2;
  j["budget_entropy"] = budget_entropy;
  j["budget_chi2"] = budget_chi2;
  j["mass_loss"] = mass_loss;
  j["margin_w2_entropy"] = margin_w2_entropy;
  j["margin_entropy_chi2"] = margin_entropy_chi2;
  j["entropy_terms"] = entropy_terms;
  j["prefix_second_moments"] = prefix_second;
  j["averaged_second_moments"] = averaged_second;
  j["second_moment"] = second_moment;
  j["conditional_bound_holds"] = conditional_bound_holds;
  j["w2_vs_entropy"] = to_string(w2_vs_entropy);
  j["entropy_vs_chi2"] = to_string(entropy_vs_chi2);
  return j;
}

TalagrandChainReport talagrand_chain(const GaussianMixtureRatio& m) {
  const std::size_t d = m.dim();
  if (d < 1 || d > 2) throw InvalidArgument("talagrand_chain: d must be 1 or 2");
  const auto& sigma = m.reference_sd();
  for (std::size_t i = 1; i < d; ++i) {
    if (sigma[i] > sigma[i - 1]) throw InvalidArgument("talagrand_chain: reference standard deviations must be non-increasing");
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double s = m.component_sd()[i];
    if (s * s >= 2.0 * sigma[i] * sigma[i]) throw DivergenceError("talagrand_chain: E f(Z)^2 diverges");
  }

  TalagrandChainReport rep;
  rep.dim = d;
  double loss = 0.0;

  const Resolved kr = resolve([&](const NormalQuadrature& r, double* l) { return kr_cost(m, r, l); }, loss, "transport cost");
  rep.w2_sq = kr.value;
  rep.budget_w2 = kr.diff;
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t coord[1] = {k};
    const GaussianMixtureRatio marginal = m.project(coord);
    const Resolved part =
        resolve([&](const NormalQuadrature& r, double* l) { return kr_cost(marginal, r, l); }, loss, "marginal transport cost");
    rep.w2_sq_lower += part.value;
    rep.budget_w2 += part.diff;
  }
  if (d == 1) rep.w2_sq_lower = rep.w2_sq;

  double previous = 0.0, second_diff = 0.0;
  rep.prefix_second.push_back(1.0);
  for (std::size_t k = 1; k <= d; ++k) {
    const GaussianMixtureRatio prefix = m.head(k);
    const Resolved h = resolve([&](const NormalQuadrature& r, double* l) { return entropy_term(prefix, r, l); }, loss, "entropy");
    rep.entropy_terms.push_back(h.value);
    rep.rhs_entropy += 2.0 * sigma[k - 1] * sigma[k - 1] * (h.value - previous);
    rep.budget_entropy += 2.0 * sigma[k - 1] * sigma[k - 1] * h.diff * (k == d ? 1.0 : 2.0);
    previous = h.value;
    const Resolved c = resolve([&](const NormalQuadrature& r, double* l) { return chi_term(prefix, r, l); }, loss, "prefix moment");
    rep.prefix_second.push_back(c.value);
    if (k == d) {
      rep.second_moment = c.value;
      second_diff = c.diff;
    }
  }
  double chi_sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const GaussianMixtureRatio dropped = m.drop(i);
    const Resolved c = resolve([&](const NormalQuadrature& r, double* l) { return chi_term(dropped, r, l); }, loss, "averaged moment");
    rep.averaged_second.push_back(c.value);
    chi_sum += sigma[i] * sigma[i] * (rep.second_moment - c.value);
    rep.budget_chi2 += 2.0 * sigma[i] * sigma[i] * (c.diff + second_diff);
  }
  rep.rhs_chi2 = 2.0 * chi_sum;
  rep.mass_loss = loss;
  const double clamp_budget = 10.0 * loss * (1.0 + std::abs(rep.second_moment));
  rep.budget_w2 += clamp_budget + 1e-13;
  rep.budget_entropy += clamp_budget + 1e-13;
  rep.budget_chi2 += clamp_budget + 1e-13;

  const double tol12 = rep.budget_w2 + rep.budget_entropy;
  rep.margin_w2_entropy = rep.rhs_entropy - rep.w2_sq;
  if (rep.w2_sq <= rep.rhs_entropy + tol12) rep.w2_vs_entropy = VerdictStatus::pass;
  else if (rep.w2_sq_lower > rep.rhs_entropy + tol12) rep.w2_vs_entropy = VerdictStatus::fail;
  else rep.w2_vs_entropy = VerdictStatus::inconclusive;

  rep.margin_entropy_chi2 = rep.rhs_chi2 - rep.rhs_entropy;
  rep.entropy_vs_chi2 = rep.rhs_entropy <= rep.rhs_chi2 + rep.budget_entropy + rep.budget_chi2 ? VerdictStatus::pass
                                                                                                : VerdictStatus::fail;

  const double slack = 1e-10 + rep.budget_chi2;
  rep.conditional_bound_holds = true;
  for (std::size_t k = 1; k <= d; ++k) {
    const double step = rep.prefix_second[k] - rep.prefix_second[k - 1];
    if (step < -slack) rep.conditional_bound_holds = false;
    if (step > rep.second_moment - rep.averaged_second[k - 1] + slack) rep.conditional_bound_holds = false;
  }
  return rep;
}

TalagrandChainReport talagrand_chain(const DensityRatioModel& model) { return talagrand_chain(model.ratio()); }

}  // namespace w2lab
