#include "w2lab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace w2lab {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::rademacher_product: return "rademacher_product";
    case SamplerKind::scaled_basis: return "scaled_basis";
    case SamplerKind::lattice_custom: return "lattice_custom";
    case SamplerKind::sphere_uniform: return "sphere_uniform";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "rademacher_product") return SamplerKind::rademacher_product;
  if (name == "scaled_basis") return SamplerKind::scaled_basis;
  if (name == "lattice_custom") return SamplerKind::lattice_custom;
  if (name == "sphere_uniform") return SamplerKind::sphere_uniform;
  throw InvalidArgument("unknown sampler kind '" + name + "'");
}

CovarianceSpec BoundedSampler::cov() const {
  for (double v : second_moments_) {
    if (!(v > 0.0)) throw InvalidArgument("sampler " + describe() + " has a degenerate (zero-variance) coordinate");
  }
  return CovarianceSpec::from_variances(second_moments_);
}

void BoundedSampler::draw_into(std::span<double> out, Rng& rng) const {
  if (out.size() != dim_) throw InvalidArgument("BoundedSampler::draw_into: dimension mismatch");
  switch (kind_) {
    case SamplerKind::rademacher_product: {
      for (std::size_t j = 0; j < dim_; ++j) out[j] = (rng() >> 63) ? scale_ : -scale_;
      return;
    }
    case SamplerKind::scaled_basis: {
      std::uniform_int_distribution<std::size_t> pick(0, 2 * dim_ - 1);
      const std::size_t c = pick(rng);
      std::fill(out.begin(), out.end(), 0.0);
      out[c / 2] = (c % 2 == 0) ? scale_ : -scale_;
      return;
    }
    case SamplerKind::sphere_uniform: {
      std::normal_distribution<double> normal(0.0, 1.0);
      double norm_sq = 0.0;
      do {
        norm_sq = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
          out[j] = normal(rng);
          norm_sq += out[j] * out[j];
        }
      } while (norm_sq == 0.0);
      const double f = scale_ / std::sqrt(norm_sq);
      for (std::size_t j = 0; j < dim_; ++j) out[j] *= f;
      // Rounding can push the norm a hair above beta; pull it back inside.
      double n2 = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) n2 += out[j] * out[j];
      if (n2 > scale_ * scale_) {
        const double g = std::nextafter(1.0, 0.0) * scale_ / std::sqrt(n2);
        for (std::size_t j = 0; j < dim_; ++j) out[j] *= g;
      }
      return;
    }
    case SamplerKind::lattice_custom: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const double u = unif(rng);
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
      if (idx >= support_->points.size()) idx = support_->points.size() - 1;
      auto p = support_->points.point(idx);
      std::copy(p.begin(), p.end(), out.begin());
      return;
    }
  }
}

Vector BoundedSampler::draw(Rng& rng) const {
  Vector out(dim_);
  draw_into(out, rng);
  return out;
}

Vector BoundedSampler::draw_sum(std::size_t n, Rng& rng) const {
  Vector out(dim_);
  draw_sum_into(n, out, rng);
  return out;
}

void BoundedSampler::draw_sum_into(std::size_t n, std::span<double> out, Rng& rng) const {
  if (out.size() != dim_) throw InvalidArgument("BoundedSampler::draw_sum_into: dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const auto ln = static_cast<long long>(n);
  switch (kind_) {
    case SamplerKind::rademacher_product: {
      std::binomial_distribution<long long> binom(ln, 0.5);
      for (std::size_t j = 0; j < dim_; ++j) out[j] = scale_ * static_cast<double>(2 * binom(rng) - ln);
      return;
    }
    case SamplerKind::scaled_basis: {
      // Multinomial over the 2d cells (+e_1, -e_1, +e_2, ...) by sequential binomials.
      long long left = ln;
      const std::size_t cells = 2 * dim_;
      for (std::size_t c = 0; c < cells && left > 0; ++c) {
        long long count = left;
        if (c + 1 < cells) {
          std::binomial_distribution<long long> binom(left, 1.0 / static_cast<double>(cells - c));
          count = binom(rng);
        }
        left -= count;
        out[c / 2] += (c % 2 == 0 ? scale_ : -scale_) * static_cast<double>(count);
      }
      return;
    }
    case SamplerKind::lattice_custom: {
      const Support& s = *support_;
      long long left = ln;
      double mass_left = 1.0;
      for (std::size_t a = 0; a < s.points.size() && left > 0; ++a) {
        long long count = left;
        if (a + 1 < s.points.size()) {
          const double p = std::clamp(s.prob[a] / mass_left, 0.0, 1.0);
          std::binomial_distribution<long long> binom(left, p);
          count = binom(rng);
        }
        left -= count;
        mass_left -= s.prob[a];
        auto x = s.points.point(a);
        for (std::size_t j = 0; j < dim_; ++j) out[j] += static_cast<double>(count) * x[j];
      }
      return;
    }
    case SamplerKind::sphere_uniform: {
      Vector x(dim_);
      for (std::size_t i = 0; i < n; ++i) {
        draw_into(x, rng);
        for (std::size_t j = 0; j < dim_; ++j) out[j] += x[j];
      }
      return;
    }
  }
}

bool BoundedSampler::lattice_valued(double spacing) const {
  if (!support_ || !(spacing > 0.0)) return false;
  for (double c : support_->points.raw()) {
    const double q = c / spacing;
    if (std::abs(q - std::round(q)) > 1e-12 * std::max(1.0, std::abs(q))) return false;
  }
  return true;
}

BoundedSampler BoundedSampler::with_declared_bound(double beta) const {
  BoundedSampler copy = *this;
  copy.bound_ = beta;
  return copy;
}

std::string BoundedSampler::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(d=" << dim_;
  if (kind_ == SamplerKind::rademacher_product) {
    os << ", scale=" << scale_;
  } else {
    os << ", beta=" << bound_;
  }
  if (kind_ == SamplerKind::lattice_custom) os << ", support=" << support_->points.size();
  os << ")";
  return os.str();
}

BoundedSampler BoundedSampler::rademacher_product(std::size_t d, double scale) {
  if (d == 0) throw InvalidArgument("rademacher_product: d must be at least 1");
  if (!(scale > 0.0)) throw InvalidArgument("rademacher_product: scale must be positive");
  BoundedSampler s;
  s.kind_ = SamplerKind::rademacher_product;
  s.dim_ = d;
  s.scale_ = scale;
  s.bound_ = scale * std::sqrt(static_cast<double>(d));
  s.second_moments_.assign(d, scale * scale);
  s.fourth_.assign(d * d, std::pow(scale, 4));
  if (d <= 16) {
    const std::size_t count = std::size_t{1} << d;
    Support sup{PointCloud(d, count), std::vector<double>(count, 1.0 / static_cast<double>(count))};
    for (std::size_t m = 0; m < count; ++m) {
      for (std::size_t j = 0; j < d; ++j) sup.points(m, j) = ((m >> j) & 1U) ? scale : -scale;
    }
    s.support_ = std::move(sup);
  }
  return s;
}

BoundedSampler BoundedSampler::scaled_basis(std::size_t d, double beta) {
  if (d == 0) throw InvalidArgument("scaled_basis: d must be at least 1");
  if (!(beta > 0.0)) throw InvalidArgument("scaled_basis: beta must be positive");
  BoundedSampler s;
  s.kind_ = SamplerKind::scaled_basis;
  s.dim_ = d;
  s.bound_ = beta;
  s.scale_ = beta;
  const double dd = static_cast<double>(d);
  s.second_moments_.assign(d, beta * beta / dd);
  s.fourth_.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) s.fourth_[i * d + i] = std::pow(beta, 4) / dd;
  Support sup{PointCloud(d, 2 * d), std::vector<double>(2 * d, 1.0 / (2.0 * dd))};
  for (std::size_t c = 0; c < 2 * d; ++c) sup.points(c, c / 2) = (c % 2 == 0) ? beta : -beta;
  s.support_ = std::move(sup);
  return s;
}

BoundedSampler BoundedSampler::sphere_uniform(std::size_t d, double beta) {
  if (d == 0) throw InvalidArgument("sphere_uniform: d must be at least 1");
  if (!(beta > 0.0)) throw InvalidArgument("sphere_uniform: beta must be positive");
  BoundedSampler s;
  s.kind_ = SamplerKind::sphere_uniform;
  s.dim_ = d;
  s.bound_ = beta;
  s.scale_ = beta;
  const double dd = static_cast<double>(d);
  s.second_moments_.assign(d, beta * beta / dd);
  const double b4 = std::pow(beta, 4) / (dd * (dd + 2.0));
  s.fourth_.assign(d * d, b4);
  for (std::size_t i = 0; i < d; ++i) s.fourth_[i * d + i] = 3.0 * b4;
  return s;
}

BoundedSampler BoundedSampler::lattice_custom(PointCloud points, std::vector<double> prob, std::optional<double> beta) {
  if (points.empty()) throw InvalidArgument("lattice_custom: empty support");
  if (points.size() != prob.size()) throw InvalidArgument("lattice_custom: support / probability length mismatch");
  if (points.size() > kMaxEnumeratedSupport) throw InvalidArgument("lattice_custom: support too large to enumerate");
  double total = 0.0;
  for (double p : prob) {
    if (!(p >= 0.0)) throw InvalidArgument("lattice_custom: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("lattice_custom: probabilities must sum to 1");

  const std::size_t d = points.dim();
  Vector mean(d, 0.0), second(d * d, 0.0);
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t i = 0; i < d; ++i) {
      mean[i] += prob[a] * points(a, i);
      for (std::size_t j = 0; j < d; ++j) second[i * d + j] += prob[a] * points(a, i) * points(a, j);
    }
  }
  double scale = 0.0;
  for (double c : points.raw()) scale = std::max(scale, std::abs(c));
  const double tol = 1e-12 * std::max(1.0, scale * scale);
  for (std::size_t i = 0; i < d; ++i) {
    if (std::abs(mean[i]) > 1e-12 * std::max(1.0, scale)) throw InvalidArgument("lattice_custom: support is not mean zero");
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j && std::abs(second[i * d + j]) > tol) throw InvalidArgument("lattice_custom: covariance must be diagonal");
    }
  }

  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return second[a * d + a] > second[b * d + b]; });
  PointCloud sorted(d, points.size());
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t k = 0; k < d; ++k) sorted(a, k) = points(a, perm[k]);
  }

  BoundedSampler s;
  s.kind_ = SamplerKind::lattice_custom;
  s.dim_ = d;
  s.coordinate_permutation_ = perm;
  s.support_ = Support{std::move(sorted), std::move(prob)};
  s.finish_from_support();
  if (beta) s.bound_ = *beta;
  return s;
}

void BoundedSampler::finish_from_support() {
  const Support& sup = *support_;
  const std::size_t d = dim_;
  second_moments_.assign(d, 0.0);
  fourth_.assign(d * d, 0.0);
  cumulative_.assign(sup.points.size(), 0.0);
  double acc = 0.0, max_norm_sq = 0.0;
  for (std::size_t a = 0; a < sup.points.size(); ++a) {
    double nsq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = sup.points(a, i);
      nsq += xi * xi;
      second_moments_[i] += sup.prob[a] * xi * xi;
      for (std::size_t j = 0; j < d; ++j) {
        const double xj = sup.points(a, j);
        fourth_[i * d + j] += sup.prob[a] * xi * xi * xj * xj;
      }
    }
    max_norm_sq = std::max(max_norm_sq, nsq);
    acc += sup.prob[a];
    cumulative_[a] = acc;
  }
  cumulative_.back() = 1.0;
  bound_ = std::sqrt(max_norm_sq);
}

ValidationReport validate_sampler(const BoundedSampler& s, std::size_t m, Rng& rng) {
  if (m < 10000) throw InvalidArgument("validate_sampler: need at least 1e4 draws");
  const std::size_t d = s.dim();
  ValidationReport rep;
  rep.draws = m;
  Vector sum(d, 0.0), sum_sq(d, 0.0), cross(d * d, 0.0), cross_sq(d * d, 0.0), x(d);
  const double limit = s.bound() + 1e-12;
  for (std::size_t t = 0; t < m; ++t) {
    s.draw_into(x, rng);
    double nsq = 0.0;
    for (std::size_t i = 0; i < d; ++i) nsq += x[i] * x[i];
    const double norm = std::sqrt(nsq);
    rep.max_norm = std::max(rep.max_norm, norm);
    if (norm > limit) {
      std::ostringstream os;
      os << "sampler " << s.describe() << " produced ||X|| = " << norm << " > declared bound " << s.bound();
      throw InvariantViolation(os.str());
    }
    for (std::size_t i = 0; i < d; ++i) {
      sum[i] += x[i];
      sum_sq[i] += x[i] * x[i];
      for (std::size_t j = 0; j < d; ++j) {
        const double p = x[i] * x[j];
        cross[i * d + j] += p;
        cross_sq[i * d + j] += p * p;
      }
    }
  }
  const double dm = static_cast<double>(m);
  rep.mean.resize(d);
  rep.mean_se.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    rep.mean[i] = sum[i] / dm;
    const double var = std::max(0.0, sum_sq[i] / dm - rep.mean[i] * rep.mean[i]);
    rep.mean_se[i] = std::sqrt(var / dm);
    if (rep.mean_se[i] > 0.0) rep.mean_max_z = std::max(rep.mean_max_z, std::abs(rep.mean[i]) / rep.mean_se[i]);
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double est = cross[i * d + j] / dm;
      const double declared = (i == j) ? s.second_moments()[i] : 0.0;
      const double dev = std::abs(est - declared);
      rep.cov_max_deviation = std::max(rep.cov_max_deviation, dev);
      const double var = std::max(0.0, cross_sq[i * d + j] / dm - est * est);
      const double se = std::sqrt(var / dm);
      if (se > 0.0) {
        rep.cov_max_z = std::max(rep.cov_max_z, dev / se);
      } else if (dev > 1e-12) {
        rep.cov_max_z = std::numeric_limits<double>::infinity();
      }
    }
  }
  return rep;
}

LatticeSpec::LatticeSpec(double spacing_, std::size_t dim_) : spacing(spacing_), dim(dim_) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidArgument("LatticeSpec: spacing must be positive");
  if (dim == 0) throw InvalidArgument("LatticeSpec: dimension must be positive");
}

LatticeSpec LatticeSpec::for_clt(double beta, std::size_t n, std::size_t dim) {
  if (n == 0) throw InvalidArgument("LatticeSpec::for_clt: n must be positive");
  return LatticeSpec(beta / std::sqrt(static_cast<double>(n)), dim);
}

double lattice_distance(std::span<const double> x, const LatticeSpec& spec) {
  if (x.size() != spec.dim) throw InvalidArgument("lattice_distance: dimension mismatch");
  double s = 0.0;
  for (double xi : x) {
    const double r = xi - spec.spacing * std::round(xi / spec.spacing);
    s += r * r;
  }
  return std::sqrt(s);
}

void require_lattice_support(const BoundedSampler& s) {
  if (!s.enumerable()) throw PreconditionError("sampler " + s.describe() + " has no enumerable support; lattice membership cannot be verified");
  if (!s.lattice_valued(s.bound())) {
    throw PreconditionError("sampler " + s.describe() + " does not take values in beta Z^d");
  }
}

}  // namespace w2lab
