#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace w2lab {

struct InequalityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// For independent A ~ pA, B ~ pB and f given as a row-major |A| x |B| table:
/// lhs = E f^2 + (E f)^2, rhs = E f_A(B)^2 + E f_B(A)^2; pass iff lhs >= rhs - 1e-12.
/// Throws InvalidArgument for negative or non-normalized probabilities or a size mismatch.
InequalityResult conditional_l2_check(std::span<const double> f_table, std::span<const double> pA, std::span<const double> pB);

/// R(t) = e^t - 1 - t - t^2/2, accurate for small |t|.
double taylor_remainder(double t);

/// lhs = |R(a) - R(b)|, rhs = |a - b| (3/2 a^2 + (a - b)^2); pass iff lhs <= rhs + 1e-12.
/// a, b must lie in [-1, 1].
InequalityResult remainder_difference_check(double a, double b);

/// sqrt(head_w2^2 + sum_{i >= k} (E X_i^2 + E Y_i^2)), k = number of leading coordinates kept.
double naive_w2_upper(std::span<const double> x_second_moments, std::span<const double> y_second_moments, std::size_t k,
                      double head_w2);

}  // namespace w2lab
