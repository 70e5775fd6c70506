#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <random>

#include "w2lab/density_ratio.hpp"
#include "w2lab/increment.hpp"
#include "w2lab/inequalities.hpp"
#include "w2lab/q_stats.hpp"
#include "w2lab/quadrature.hpp"
#include "w2lab/talagrand.hpp"

using namespace w2lab;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

double r_big(std::uint64_t n) {
  const Big t = Big(1) / (Big(n) * Big(n) - 1);
  return static_cast<double>(t / 2 - boost::multiprecision::log1p(t) / 2);
}

BoundedSampler three_point() {
  return BoundedSampler::lattice_custom(PointCloud(1, std::vector<double>{-2.0, 0.0, 2.0}), {0.125, 0.75, 0.125});
}

BoundedSampler cross_diag41() {
  const double a = 2.0 * std::sqrt(2.0), b = std::sqrt(2.0);
  return BoundedSampler::lattice_custom(PointCloud(2, std::vector<double>{a, 0, -a, 0, 0, b, 0, -b}), {0.25, 0.25, 0.25, 0.25});
}

// Point mass at the origin in d dimensions, declared with unit variances so
// the reference Gaussian is N(0, I).
Support origin_support(std::size_t d) { return Support{PointCloud(d, 1), {1.0}}; }

}  // namespace

TEST_CASE("log correction r(n) against 50-digit arithmetic") {
  CHECK(r_of_n(2) == doctest::Approx(1.0 / 6.0 - 0.5 * std::log(4.0 / 3.0)).epsilon(1e-14));
  CHECK(r_of_n(2) == doctest::Approx(0.0228256).epsilon(1e-6));
  for (std::uint64_t n : {2ull, 3ull, 5ull, 10ull, 17ull, 100ull, 1000ull, 123456ull, 1000000ull}) {
    const double r = r_of_n(n);
    CHECK(r == doctest::Approx(r_big(n)).epsilon(1e-13));
    const double nn = double(n) * double(n) - 1.0;
    CHECK(r >= 0.0);
    CHECK(r <= 1.0 / (nn * nn));
  }
  CHECK(r_of_n(1000000) < 1e-12);
  CHECK_THROWS_AS(r_of_n(1), InvalidArgument);
}

TEST_CASE("Q statistics on fixed inputs") {
  const CovarianceSpec one({1.0});
  const std::vector<double> zero{0.0};
  const QStats z = compute_q_stats(zero, zero, one, 2);
  CHECK(z.q_i[0] == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-14));
  const std::vector<double> h{1.0 / std::sqrt(2.0)};
  const QStats q = compute_q_stats(h, h, one, 2);
  CHECK(q.q_total == doctest::Approx(0.5 - r_of_n(2)).epsilon(1e-14));
  CHECK(q.q_total == doctest::Approx(0.4771744).epsilon(1e-6));
}

TEST_CASE("pointwise |Q_i| bound on random admissible inputs") {
  Rng rng = make_rng(1, "qpt");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CovarianceSpec cov({1.0, 0.5});
  const std::uint64_t n = 200;  // 5 beta^2 / sigma_min^2 = 5 (1.25) / 0.25 = 25
  const double beta = std::sqrt(1.25);
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> y{u(rng), 0.5 * u(rng)}, yp{u(rng), 0.5 * u(rng)};
    for (double& v : y) v /= std::sqrt(double(n));
    for (double& v : yp) v /= std::sqrt(double(n));
    const QStats s = compute_q_stats(y, yp, cov, n, beta);
    const double nn = double(n) * n;
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::abs(s.q_i[i]) <= nn * std::abs(y[i] * yp[i]) / (cov.variance(i) * (nn - 1.0)) + 1.0 / (2.0 * n) + 1e-15);
    }
    CHECK(std::abs(s.q_total) <= 1.0);
  }
}

TEST_CASE("Q moments by enumeration") {
  const BoundedSampler s = BoundedSampler::rademacher_product(1, 1.0);
  const QMomentReport r = estimate_q_moments(s, 10, MomentMode::enumeration());
  CHECK(r.exact);
  CHECK(r.mean_q[0].value == doctest::Approx(-1.0 / 198.0 - r_of_n(10)).epsilon(1e-13));
  CHECK(r.mean_q_sq.value <= 2.0 / 99.0);
  CHECK(r.all_pass());
  CHECK(r.pointwise_violations == 0);

  // direct enumeration over the four sign pairs
  double mq = 0.0;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) {
      const std::vector<double> y{a / std::sqrt(10.0)}, yp{b / std::sqrt(10.0)};
      mq += 0.25 * compute_q_stats(y, yp, CovarianceSpec({1.0}), 10).q_total;
    }
  CHECK(r.mean_q[0].value == doctest::Approx(mq).epsilon(1e-14));
}

TEST_CASE("Q moments by Monte Carlo") {
  const BoundedSampler s = BoundedSampler::scaled_basis(2, std::sqrt(2.0));
  const QMomentReport r = estimate_q_moments(s, 20, MomentMode::monte_carlo(1000000, 11));
  CHECK_FALSE(r.exact);
  CHECK(r.all_pass());
  CHECK(r.checks.size() == 2 + 4 + 2 + 2 + 1);
  CHECK_THROWS_AS(estimate_q_moments(s, 9, MomentMode::enumeration()), PreconditionError);
}

TEST_CASE("E exp(Q) by enumeration") {
  const BoundedSampler s = BoundedSampler::rademacher_product(1, 1.0);
  const Estimate e = density_second_moment_rhs(s, 10, MomentMode::enumeration());
  double direct = 0.0;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) {
      const std::vector<double> y{a / std::sqrt(10.0)}, yp{b / std::sqrt(10.0)};
      direct += 0.25 * std::exp(compute_q_stats(y, yp, CovarianceSpec({1.0}), 10).q_total);
    }
  CHECK(e.value == doctest::Approx(direct).epsilon(1e-14));

  // Y = 0: exp(k (1 / (2 (n^2 - 1)) - r(n))) = (1 + 1/(n^2 - 1))^{k/2}
  for (std::size_t k : {1u, 2u}) {
    const std::uint64_t n = 7;
    const Estimate z = density_second_moment_rhs(origin_support(k), n, CovarianceSpec::isotropic(k, 1.0));
    CHECK(z.value == doctest::Approx(std::pow(1.0 + 1.0 / 48.0, k / 2.0)).epsilon(1e-14));
  }
}

TEST_CASE("density ratio second moment by quadrature") {
  const BoundedSampler s = BoundedSampler::rademacher_product(1, 1.0);
  const DensityRatioModel m(s, 10);
  const QuadratureValue lhs = density_second_moment_lhs(m);
  CHECK(lhs.value == doctest::Approx(density_second_moment_rhs(s, 10, MomentMode::enumeration()).value).epsilon(1e-6));
  CHECK(ratio_first_moment(m.ratio()).value == doctest::Approx(1.0).epsilon(1e-8));

  // degenerate Y = 0 in d = 2
  const DensityRatioModel z(origin_support(2), 12, CovarianceSpec::isotropic(2, 1.0));
  CHECK(density_second_moment_lhs(z).value ==
        doctest::Approx(density_second_moment_rhs(origin_support(2), 12, CovarianceSpec::isotropic(2, 1.0)).value).epsilon(1e-8));

  // tau is a probability density and rho is N(0, I)
  const NormalQuadrature& q = normal_quadrature(60);
  double mass = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const std::vector<double> x{q.node[i]};
    mass += q.weight[i] * m.tau(x) / m.rho(x);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("coordinate-averaged second moments") {
  // d = 1: f_(1) is constant 1
  const BoundedSampler s1 = BoundedSampler::rademacher_product(1, 1.0);
  CHECK(averaged_second_moment(s1, 10, 0, MomentMode::enumeration()).value == doctest::Approx(1.0).epsilon(1e-14));

  const BoundedSampler s = BoundedSampler::scaled_basis(2, std::sqrt(2.0));
  const Estimate a0 = averaged_second_moment(s, 40, 0, MomentMode::enumeration());
  const Estimate a1 = averaged_second_moment(s, 40, 1, MomentMode::enumeration());
  CHECK(a0.value == doctest::Approx(a1.value).epsilon(1e-14));

  // explicit quadrature of f_(i)(x)^2 rho(x) on a tensor rule
  const DensityRatioModel m(s, 40);
  const NormalQuadrature& q = normal_quadrature(80);
  for (std::size_t i = 0; i < 2; ++i) {
    double total = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a)
      for (std::size_t b = 0; b < q.size(); ++b) {
        const std::vector<double> x{q.node[a], q.node[b]};
        const double f = m.f_averaged(i, x);
        total += q.weight[a] * q.weight[b] * f * f;
      }
    CHECK(total == doctest::Approx(averaged_second_moment(s, 40, i, MomentMode::enumeration()).value).epsilon(1e-6));
    CHECK(averaged_second_moment_quadrature(m, i).value == doctest::Approx(total).epsilon(1e-8));
  }
}

TEST_CASE("anisotropic identities follow the sorted coordinate order") {
  // unsorted input: the second coordinate has the larger variance
  const double a = std::sqrt(2.0), b = 2.0 * std::sqrt(2.0);
  const BoundedSampler s = BoundedSampler::lattice_custom(PointCloud(2, std::vector<double>{a, 0, -a, 0, 0, b, 0, -b}), {0.25, 0.25, 0.25, 0.25});
  const DensityRatioModel m(s, 50);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(averaged_second_moment_quadrature(m, i).value ==
          doctest::Approx(averaged_second_moment(s, 50, i, MomentMode::enumeration()).value).epsilon(1e-6));
  }
  CHECK(density_second_moment_lhs(m).value == doctest::Approx(density_second_moment_rhs(s, 50, MomentMode::enumeration()).value).epsilon(1e-6));
}

TEST_CASE("transport-entropy chain") {
  const TalagrandChainReport g = talagrand_chain(GaussianMixtureRatio::gaussian({0.5}, {1.0}, {1.0}));
  CHECK(g.w2_sq == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(g.rhs_entropy == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(g.rhs_chi2 == doctest::Approx(2.0 * (std::exp(0.25) - 1.0)).epsilon(1e-6));

  const TalagrandChainReport id = talagrand_chain(GaussianMixtureRatio::gaussian({0.0}, {1.0}, {1.0}));
  CHECK(std::abs(id.w2_sq) <= 1e-12);
  CHECK(std::abs(id.rhs_entropy) <= 1e-12);
  CHECK(std::abs(id.rhs_chi2) <= 1e-12);

  const TalagrandChainReport r = talagrand_chain(DensityRatioModel(cross_diag41(), 50));
  CHECK(r.status() == VerdictStatus::pass);
  CHECK(r.w2_sq_lower <= r.w2_sq);
  CHECK(r.margin_w2_entropy > 0.0);
  CHECK(r.margin_entropy_chi2 > 0.0);
  CHECK(r.conditional_bound_holds);
  CHECK(r.prefix_second.front() == doctest::Approx(1.0));
  CHECK(r.prefix_second.back() == doctest::Approx(r.second_moment));
}

TEST_CASE("conditional L2 inequality") {
  const std::vector<double> pa{0.3, 0.7}, pb{0.2, 0.5, 0.3};
  const std::vector<double> c(6, 2.5);
  const InequalityResult k = conditional_l2_check(c, pa, pb);
  CHECK(k.lhs == doctest::Approx(2.0 * 6.25));
  CHECK(k.rhs == doctest::Approx(k.lhs));

  Rng rng = make_rng(2, "tables");
  std::uniform_int_distribution<std::size_t> us(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0), g(-2.0, 2.0);
  auto probs = [&](std::size_t n) {
    std::vector<double> p(n);
    double s = 0.0;
    for (double& x : p) s += (x = u(rng) + 1e-3);
    for (double& x : p) x /= s;
    return p;
  };
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t na = us(rng), nb = us(rng);
    const auto p = probs(na), q = probs(nb);
    std::vector<double> f(na * nb);
    if (t % 2 == 0) {
      // rank one: f(a, b) = g(a) h(b)
      std::vector<double> ga(na), hb(nb);
      for (double& x : ga) x = g(rng);
      for (double& x : hb) x = g(rng);
      for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) f[i * nb + j] = ga[i] * hb[j];
    } else {
      for (double& x : f) x = g(rng);
    }
    if (!conditional_l2_check(f, p, q).pass) ++violations;
  }
  CHECK(violations == 0);
  CHECK_THROWS_AS(conditional_l2_check(c, std::vector<double>{0.5, 0.6}, pb), InvalidArgument);
}

TEST_CASE("Taylor remainder difference") {
  CHECK(taylor_remainder(0.0) == 0.0);
  CHECK(taylor_remainder(1e-3) == doctest::Approx(1e-9 / 6.0 + 1e-12 / 24.0).epsilon(1e-10));
  const InequalityResult same = remainder_difference_check(0.3, 0.3);
  CHECK(same.lhs == 0.0);
  CHECK(same.pass);
  const InequalityResult r = remainder_difference_check(1.0, 0.0);
  CHECK(r.lhs == doctest::Approx(std::exp(1.0) - 2.5).epsilon(1e-14));
  CHECK(r.rhs == doctest::Approx(2.5));
  Rng rng = make_rng(3, "pairs");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int violations = 0;
  for (int t = 0; t < 1000000; ++t)
    if (!remainder_difference_check(u(rng), u(rng)).pass) ++violations;
  CHECK(violations == 0);
  CHECK_THROWS_AS(remainder_difference_check(1.5, 0.0), InvalidArgument);
}

TEST_CASE("increment bound") {
  Rng rng = make_rng(4, "inc");
  const IncrementCheck c = increment_bound_check(three_point(), 20, 1000000, rng);
  CHECK(c.bound == doctest::Approx(0.5));
  CHECK(c.w2_hat < 0.25);
  CHECK(c.pass);
  CHECK_THROWS_AS(increment_bound_check(three_point(), 19, 1000, rng), PreconditionError);

  // X = 0: W2(Z_n, Z_{n-1}) = sqrt(n) - sqrt(n - 1) in d = 1
  const std::uint64_t n = 30;
  const double w = increment_w2_estimate(CovarianceSpec({1.0}), nullptr, n, 1000000, rng);
  const double exact = w2_gaussian_diag(CovarianceSpec({1.0}), CovarianceSpec({1.0}), double(n), double(n - 1));
  CHECK(exact == doctest::Approx(std::sqrt(30.0) - std::sqrt(29.0)));
  CHECK(std::abs(w - exact) <= 0.02);
}

TEST_CASE("naive tail bound") {
  const std::vector<double> xm{1.0, 2.0}, ym{1.0, 2.0};
  CHECK(naive_w2_upper(xm, ym, 2, 0.3) == doctest::Approx(0.3));
  CHECK(naive_w2_upper(xm, ym, 1, 0.0) == doctest::Approx(std::sqrt(4.0)));
  CHECK(naive_w2_upper(xm, ym, 0, 0.0) == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("A_{n,k} schedule") {
  const double beta = std::sqrt(2.0);
  const AnkSchedule s = ank_bound_schedule(4096, CovarianceSpec::isotropic(2, 1.0), beta);
  CHECK(s.within_bound);
  for (std::uint64_t n = 1; n <= 4096; ++n) {
    CHECK(s.at(n, 0).bound == 0.0);
    for (std::size_t k = 1; k <= 2; ++k) CHECK(s.at(n, k).bound <= 5.0 * std::sqrt(double(k)) * beta * (1.0 + std::log(double(n))) + 1e-9);
  }
  CHECK(s.at(1, 2).bound <= 2.0 * beta + 1e-12);
  CHECK(s.at(1, 2).bound == doctest::Approx(2.0));  // sqrt(E|X|^2 + E|Z|^2) = sqrt(2 + 2)
  // threshold for (beta^2 = 2, sigma^2 = 1) is 10: n = 10 still uses the naive branch
  CHECK(s.at(10, 2).branch == ScheduleBranch::naive);
  CHECK(s.at(11, 2).branch == ScheduleBranch::increment);
  const double naive = std::sqrt(s.at(10, 1).bound * s.at(10, 1).bound + 2.0 * 10.0 * 1.0);
  CHECK(s.at(10, 2).bound == doctest::Approx(naive));
  CHECK(rate_bound(1, 1.0, 16) == doctest::Approx(5.0 * (1.0 + std::log(16.0)) / 4.0));
  CHECK_THROWS_AS(ank_bound_schedule(10, CovarianceSpec::isotropic(2, 1.0), 1.0), PreconditionError);
}
