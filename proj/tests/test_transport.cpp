#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "w2lab/assignment.hpp"
#include "w2lab/gaussmath.hpp"
#include "w2lab/transport.hpp"

using namespace w2lab;

namespace {

PointCloud random_cloud(std::size_t d, std::size_t m, Rng& rng) {
  std::normal_distribution<double> nd;
  PointCloud c(d, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) c(i, j) = nd(rng);
  return c;
}

double brute_force(const PointCloud& a, const PointCloud& b) {
  std::vector<std::size_t> p(a.size());
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c += squared_distance(a.point(i), b.point(p[i]));
    best = std::min(best, c);
  } while (std::next_permutation(p.begin(), p.end()));
  return best / a.size();
}

}  // namespace

TEST_CASE("exact transport on small instances") {
  Rng rng = make_rng(1, "tiny");
  PointCloud a = random_cloud(2, 6, rng);
  const ExactTransport same = w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(a));
  CHECK(same.cost == 0.0);
  REQUIRE(same.plan.permutation);
  for (std::size_t i = 0; i < 6; ++i) CHECK((*same.plan.permutation)[i] == i);

  const std::vector<double> x{0.0, 1.0}, y{1.0, 2.0};
  const ExactTransport t = w2_exact(EmpiricalMeasure::from_1d(x), EmpiricalMeasure::from_1d(y));
  CHECK(t.distance() == doctest::Approx(1.0));
  CHECK((*t.plan.permutation)[0] == 0);
  CHECK(t.plan.max_marginal_violation(2, 2) <= 1e-15);
}

TEST_CASE("exact transport matches permutation search") {
  Rng rng = make_rng(2, "brute");
  std::uniform_int_distribution<std::size_t> um(1, 7), ud(1, 3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = um(rng), d = ud(rng);
    PointCloud a = random_cloud(d, m, rng), b = random_cloud(d, m, rng);
    CHECK(w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).cost == doctest::Approx(brute_force(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("exact transport errors") {
  Rng rng = make_rng(3, "err");
  PointCloud a = random_cloud(2, 5, rng), b = random_cloud(2, 6, rng), c = random_cloud(3, 5, rng);
  CHECK_THROWS_AS(w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)), InvalidArgument);
  CHECK_THROWS_AS(w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(c)), InvalidArgument);
  CHECK_THROWS_AS(w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(a), 4), CapacityError);
}

TEST_CASE("quantile coupling in one dimension") {
  const std::vector<double> e{1.0, 2.0};
  CHECK(w2_quantile_1d(e, e) == 0.0);
  CHECK(w2_quantile_1d(std::vector<double>{1.0, 3.0}, std::vector<double>{2.0, 4.0}) == doctest::Approx(1.0));
  Rng rng = make_rng(4, "q1d");
  std::uniform_int_distribution<std::size_t> um(1, 80);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = um(rng);
    PointCloud a = random_cloud(1, m, rng), b = random_cloud(1, m, rng);
    CHECK(w2_quantile_1d(a.raw(), b.raw()) == doctest::Approx(w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).distance()).epsilon(1e-10));
  }
  // shifted Gaussians: W2 = |shift|
  const std::size_t m = 1000000;
  PointCloud z0 = sample_gaussian(GaussianModel(CovarianceSpec({1.0}), 1.0), m, rng);
  PointCloud z1 = sample_gaussian(GaussianModel(CovarianceSpec({1.0}), 1.0), m, rng);
  for (std::size_t i = 0; i < z1.size(); ++i) z1(i, 0) += 0.5;
  CHECK(std::abs(w2_quantile_1d(z0.raw(), z1.raw()) - 0.5) <= 0.01);
}

TEST_CASE("assignment solver on a small dense matrix") {
  // classic 3x3 instance with optimum 5 (rows 0->1, 1->0, 2->2)
  const double c[3][3] = {{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const Assignment a = solve_assignment(3, [&](std::size_t i, std::size_t j) { return c[i][j]; });
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) total += c[i][a.col_of_row[i]];
  CHECK(total == 5.0);
}

TEST_CASE("sinkhorn against exact transport") {
  const std::vector<double> x{0.0, 1.0}, y{1.0, 2.0};
  SinkhornOptions o;
  o.epsilon = 1e-3;
  const SinkhornResult r = sinkhorn_w2(EmpiricalMeasure::from_1d(x), EmpiricalMeasure::from_1d(y), o);
  CHECK(r.cost == doctest::Approx(1.0).epsilon(0.01));
  CHECK(r.marginal_violation <= 1e-6);

  Rng rng = make_rng(5, "sink");
  PointCloud a = random_cloud(2, 200, rng), b = random_cloud(2, 200, rng);
  for (std::size_t i = 0; i < 200; ++i) b(i, 0) += 2.0;
  std::vector<double> costs;
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = 0; j < 200; ++j) costs.push_back(squared_distance(a.point(i), b.point(j)));
  std::nth_element(costs.begin(), costs.begin() + costs.size() / 2, costs.end());
  SinkhornOptions o2;
  o2.epsilon = 0.01 * costs[costs.size() / 2];
  o2.tol = 1e-6;
  const double exact = w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).cost;
  CHECK(std::abs(sinkhorn_w2(EmpiricalMeasure(a), EmpiricalMeasure(b), o2).cost - exact) <= 0.03 * exact);

  PointCloud same = random_cloud(2, 30, rng);
  SinkhornOptions o3;
  o3.epsilon = 1e-4;
  CHECK(sinkhorn_w2(EmpiricalMeasure(same), EmpiricalMeasure(same), o3).cost <= 1e-3);
}

TEST_CASE("projection lower bound") {
  Rng rng = make_rng(6, "proj");
  PointCloud a = random_cloud(3, 500, rng), b = random_cloud(3, 500, rng);
  const PointCloud dirs = projection_directions(3, 20, rng);
  CHECK(dirs.size() == 23);
  CHECK(w2_projection_lower(EmpiricalMeasure(a), EmpiricalMeasure(a), dirs) == 0.0);
  CHECK(w2_projection_lower(EmpiricalMeasure(a), EmpiricalMeasure(b), dirs) <= w2_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).distance() + 1e-12);

  PointCloud s = a;
  for (std::size_t i = 0; i < s.size(); ++i) s(i, 0) += 0.7;
  CHECK(w2_projection_lower(EmpiricalMeasure(a), EmpiricalMeasure(s), dirs) == doctest::Approx(0.7).epsilon(1e-12));

  PointCloud bad(3, std::vector<double>{1.0, 1.0, 0.0});
  CHECK_THROWS_AS(w2_projection_lower(EmpiricalMeasure(a), EmpiricalMeasure(b), bad), InvalidArgument);
}

TEST_CASE("compensated summation") {
  KahanSum k;
  k.add(1.0);
  for (int i = 0; i < 1000000; ++i) k.add(1e-16);
  CHECK(k.value() == doctest::Approx(1.0 + 1e-10).epsilon(1e-15));
}
