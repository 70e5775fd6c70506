#pragma once

// Dense linear assignment by shortest augmenting paths (Jonker-Volgenant /
// Crouse formulation). Costs are queried through a functor so large
// Euclidean instances never materialize an m x m matrix.

#include <cstddef>
#include <limits>
#include <vector>

#include "w2lab/errors.hpp"

namespace w2lab {

struct Assignment {
  std::vector<std::size_t> col_of_row;  // row i is matched to column col_of_row[i]
  std::vector<double> row_dual;
  std::vector<double> col_dual;
};

namespace detail {

// Column reduction: every column takes its cheapest row as dual. Rows that
// win exactly one column are matched immediately; the rest go through
// augmentation.
template <typename CostFn>
void column_reduction(std::size_t n, CostFn& cost, std::vector<double>& v, std::vector<long>& row4col,
                      std::vector<long>& col4row) {
  std::vector<std::size_t> best_row(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double c = cost(i, j);
      if (c < best) {
        best = c;
        best_row[j] = i;
      }
    }
    v[j] = best;
  }
  for (std::size_t j = n; j-- > 0;) {
    const std::size_t i = best_row[j];
    if (col4row[i] < 0) {
      col4row[i] = static_cast<long>(j);
      row4col[j] = static_cast<long>(i);
    }
  }
}

}  // namespace detail

/// Minimum-cost perfect matching on an n x n cost given by cost(i, j).
/// Costs must be finite. O(n^3) worst case; much faster on geometric costs.
template <typename CostFn>
Assignment solve_assignment(std::size_t n, CostFn&& cost) {
  Assignment out;
  std::vector<double> u(n, 0.0), v(n, 0.0), shortest(n);
  std::vector<long> path(n, -1), row4col(n, -1), col4row(n, -1);
  std::vector<char> scanned_row(n), scanned_col(n);
  std::vector<std::size_t> remaining(n);

  if (n > 0) detail::column_reduction(n, cost, v, row4col, col4row);
  // Row duals consistent with the reduced columns: u_i = min_j c_ij - v_j.
  for (std::size_t i = 0; i < n; ++i) {
    if (col4row[i] >= 0) u[i] = cost(i, static_cast<std::size_t>(col4row[i])) - v[col4row[i]];
  }

  for (std::size_t cur = 0; cur < n; ++cur) {
    if (col4row[cur] >= 0) continue;
    std::fill(scanned_row.begin(), scanned_row.end(), 0);
    std::fill(scanned_col.begin(), scanned_col.end(), 0);
    std::fill(shortest.begin(), shortest.end(), std::numeric_limits<double>::infinity());
    std::size_t num_remaining = n;
    for (std::size_t it = 0; it < n; ++it) remaining[it] = n - it - 1;

    double min_val = 0.0;
    long sink = -1;
    std::size_t i = cur;
    while (sink < 0) {
      scanned_row[i] = 1;
      std::size_t index = n;
      double lowest = std::numeric_limits<double>::infinity();
      const double base = min_val - u[i];
      for (std::size_t it = 0; it < num_remaining; ++it) {
        const std::size_t j = remaining[it];
        const double r = base + cost(i, j) - v[j];
        if (r < shortest[j]) {
          path[j] = static_cast<long>(i);
          shortest[j] = r;
        }
        if (shortest[j] < lowest || (shortest[j] == lowest && row4col[j] < 0)) {
          lowest = shortest[j];
          index = it;
        }
      }
      if (index == n) throw InvalidArgument("solve_assignment: infeasible (non-finite) costs");
      min_val = lowest;
      const std::size_t j = remaining[index];
      if (row4col[j] < 0) {
        sink = static_cast<long>(j);
      } else {
        i = static_cast<std::size_t>(row4col[j]);
      }
      scanned_col[j] = 1;
      remaining[index] = remaining[--num_remaining];
    }

    u[cur] += min_val;
    for (std::size_t r = 0; r < n; ++r) {
      if (scanned_row[r] && r != cur) u[r] += min_val - shortest[col4row[r]];
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (scanned_col[c]) v[c] -= min_val - shortest[c];
    }

    long j = sink;
    while (true) {
      const long r = path[j];
      row4col[j] = r;
      std::swap(col4row[r], j);
      if (static_cast<std::size_t>(r) == cur) break;
    }
  }

  out.col_of_row.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.col_of_row[i] = static_cast<std::size_t>(col4row[i]);
  out.row_dual = std::move(u);
  out.col_dual = std::move(v);
  return out;
}

}  // namespace w2lab
