#include "w2lab/inequalities.hpp"

#include <cmath>

#include "w2lab/errors.hpp"
#include "w2lab/transport.hpp"

namespace w2lab {

namespace {

void require_probabilities(std::span<const double> p, const char* which) {
  if (p.empty()) throw InvalidArgument(std::string("conditional_l2_check: empty probability vector ") + which);
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw InvalidArgument(std::string("conditional_l2_check: negative probability in ") + which);
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument(std::string("conditional_l2_check: ") + which + " does not sum to 1");
}

}  // namespace

InequalityResult conditional_l2_check(std::span<const double> f_table, std::span<const double> pA, std::span<const double> pB) {
  require_probabilities(pA, "pA");
  require_probabilities(pB, "pB");
  const std::size_t na = pA.size(), nb = pB.size();
  if (f_table.size() != na * nb) throw InvalidArgument("conditional_l2_check: table size does not match |A| x |B|");
  KahanSum mean, second;
  std::vector<double> fA(nb, 0.0), fB(na, 0.0);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      const double v = f_table[a * nb + b];
      const double w = pA[a] * pB[b];
      mean.add(w * v);
      second.add(w * v * v);
      fA[b] += pA[a] * v;
      fB[a] += pB[b] * v;
    }
  }
  KahanSum sa, sb;
  for (std::size_t b = 0; b < nb; ++b) sa.add(pB[b] * fA[b] * fA[b]);
  for (std::size_t a = 0; a < na; ++a) sb.add(pA[a] * fB[a] * fB[a]);
  InequalityResult r;
  r.lhs = second.value() + mean.value() * mean.value();
  r.rhs = sa.value() + sb.value();
  r.pass = r.lhs >= r.rhs - 1e-12;
  return r;
}

double taylor_remainder(double t) {
  if (std::abs(t) < 0.5) {
    double term = t * t * t / 6.0, sum = 0.0;
    for (int m = 3; m < 60; ++m) {
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      term *= t / (m + 1);
    }
    return sum;
  }
  return std::expm1(t) - t - 0.5 * t * t;
}

InequalityResult remainder_difference_check(double a, double b) {
  if (!(a >= -1.0 && a <= 1.0 && b >= -1.0 && b <= 1.0)) {
    throw InvalidArgument("remainder_difference_check: a and b must lie in [-1, 1]");
  }
  InequalityResult r;
  r.lhs = std::abs(taylor_remainder(a) - taylor_remainder(b));
  r.rhs = std::abs(a - b) * (1.5 * a * a + (a - b) * (a - b));
  r.pass = r.lhs <= r.rhs + 1e-12;
  return r;
}

double naive_w2_upper(std::span<const double> x_second_moments, std::span<const double> y_second_moments, std::size_t k,
                      double head_w2) {
  if (x_second_moments.size() != y_second_moments.size()) throw InvalidArgument("naive_w2_upper: dimension mismatch");
  if (k > x_second_moments.size()) throw InvalidArgument("naive_w2_upper: k exceeds dimension");
  if (!(head_w2 >= 0.0)) throw InvalidArgument("naive_w2_upper: head_w2 must be non-negative");
  double s = head_w2 * head_w2;
  for (std::size_t i = k; i < x_second_moments.size(); ++i) s += x_second_moments[i] + y_second_moments[i];
  return std::sqrt(s);
}

}  // namespace w2lab
