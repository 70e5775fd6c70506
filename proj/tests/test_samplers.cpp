#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "w2lab/samplers.hpp"

using namespace w2lab;

namespace {

double norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("rademacher product") {
  BoundedSampler s = BoundedSampler::rademacher_product(1, 1.0);
  CHECK(s.bound() == 1.0);
  Rng rng = make_rng(1, "rad");
  for (int i = 0; i < 100; ++i) {
    const double x = s.draw(rng)[0];
    CHECK((x == 1.0 || x == -1.0));
  }
  BoundedSampler s4 = BoundedSampler::rademacher_product(4, 1.0);
  CHECK(s4.bound() == 2.0);
  for (int i = 0; i < 100; ++i) CHECK(norm(s4.draw(rng)) == doctest::Approx(2.0).epsilon(1e-15));

  BoundedSampler s2 = BoundedSampler::rademacher_product(2, 1.0);
  const ValidationReport r = validate_sampler(s2, 1000000, rng);
  CHECK(r.cov_max_z <= 5.0);
  CHECK(r.mean_max_z <= 5.0);
  CHECK(r.max_norm <= s2.bound() + 1e-12);
  CHECK_THROWS_AS(BoundedSampler::rademacher_product(0, 1.0), InvalidArgument);
}

TEST_CASE("scaled basis") {
  Rng rng = make_rng(2, "basis");
  BoundedSampler s1 = BoundedSampler::scaled_basis(1, 3.0);
  for (int i = 0; i < 50; ++i) CHECK(std::abs(s1.draw(rng)[0]) == 3.0);
  BoundedSampler s3 = BoundedSampler::scaled_basis(3, std::sqrt(3.0));
  for (double v : s3.second_moments()) CHECK(v == doctest::Approx(1.0));

  // each coordinate is hit with frequency 1/5
  BoundedSampler s5 = BoundedSampler::scaled_basis(5, 1.0);
  const int m = 500000;
  std::vector<int> hits(5, 0);
  for (int i = 0; i < m; ++i) {
    const Vector x = s5.draw(rng);
    for (int j = 0; j < 5; ++j)
      if (x[j] != 0.0) ++hits[j];
  }
  const double se = std::sqrt(0.2 * 0.8 / m);
  for (int h : hits) CHECK(std::abs(double(h) / m - 0.2) <= 5.0 * se);

  BoundedSampler s4 = BoundedSampler::scaled_basis(4, 2.0);
  const ValidationReport r = validate_sampler(s4, 1000000, rng);
  CHECK(r.mean_max_z <= 5.0);
}

TEST_CASE("declared bound violations are detected") {
  Rng rng = make_rng(3, "bad");
  BoundedSampler s = BoundedSampler::scaled_basis(2, 2.0).with_declared_bound(1.0);
  CHECK_THROWS_AS(validate_sampler(s, 10000, rng), InvariantViolation);
}

TEST_CASE("sphere sampler") {
  Rng rng = make_rng(4, "sphere");
  BoundedSampler s = BoundedSampler::sphere_uniform(3, 2.0);
  for (int i = 0; i < 100; ++i) CHECK(norm(s.draw(rng)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_FALSE(s.enumerable());
  const ValidationReport r = validate_sampler(s, 200000, rng);
  CHECK(r.cov_max_z <= 5.0);
}

TEST_CASE("custom lattice support") {
  PointCloud pts(1, std::vector<double>{-2.0, 0.0, 2.0});
  BoundedSampler s = BoundedSampler::lattice_custom(pts, {0.125, 0.75, 0.125});
  CHECK(s.bound() == 2.0);
  CHECK(s.second_moments()[0] == doctest::Approx(1.0));
  CHECK(s.lattice_valued(2.0));
  CHECK_NOTHROW(require_lattice_support(s));
  // not mean zero
  CHECK_THROWS(BoundedSampler::lattice_custom(PointCloud(1, std::vector<double>{0.0, 1.0}), {0.5, 0.5}));
  CHECK_THROWS_AS(require_lattice_support(BoundedSampler::sphere_uniform(2, 1.0)), PreconditionError);
}

TEST_CASE("sums of summands") {
  Rng rng = make_rng(5, "sum");
  BoundedSampler s = BoundedSampler::rademacher_product(1, 1.0);
  const std::size_t n = 101;
  double sq = 0.0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const Vector x = s.draw_sum(n, rng);
    // parity: a sum of 101 signs is odd
    CHECK(std::fmod(std::abs(x[0]), 2.0) == 1.0);
    sq += x[0] * x[0];
  }
  // Var S_n = n, and Var (S_n^2) = 2 n^2 - 2n
  CHECK(std::abs(sq / m - double(n)) <= 5.0 * std::sqrt((2.0 * n * n - 2.0 * n) / m));

  BoundedSampler b = BoundedSampler::scaled_basis(2, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = b.draw_sum(10, rng);
    CHECK(std::abs(x[0]) + std::abs(x[1]) <= 10.0);
    CHECK(std::fmod(std::abs(x[0]) + std::abs(x[1]), 2.0) == 0.0);
  }
}

TEST_CASE("lattice distance") {
  CHECK(lattice_distance(std::vector<double>{3.0, -2.0}, LatticeSpec(1.0, 2)) == 0.0);
  CHECK(lattice_distance(std::vector<double>{0.5}, LatticeSpec(1.0, 1)) == doctest::Approx(0.5));
  const std::vector<double> x{0.3, 0.4};
  double brute = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) brute = std::min(brute, std::hypot(x[0] - i, x[1] - j));
  CHECK(lattice_distance(x, LatticeSpec(1.0, 2)) == doctest::Approx(brute).epsilon(1e-15));
  CHECK(brute == doctest::Approx(0.5));
  CHECK(LatticeSpec::for_clt(2.0, 16, 1).spacing == doctest::Approx(0.5));
  CHECK_THROWS_AS(LatticeSpec(0.0, 1), InvalidArgument);
}
