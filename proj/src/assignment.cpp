#include "mobility/assignment.hpp"

#include <cmath>
#include <limits>

#include "mobility/error.hpp"

namespace mobility {

namespace {

// Rows <= cols. Returns for every row its column.
std::vector<int> hungarian(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  Assignment result;
  const auto rows = cost.rows();
  const auto cols = cost.cols();
  result.row_to_col.assign(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return result;
  if (!cost.allFinite()) throw Error(ErrorCode::Numeric, "solve_assignment: non-finite cost");

  if (rows <= cols) {
    result.row_to_col = hungarian(cost);
  } else {
    const auto col_to_row = hungarian(cost.transpose());
    for (std::size_t c = 0; c < col_to_row.size(); ++c) result.row_to_col[col_to_row[c]] = static_cast<int>(c);
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int c = result.row_to_col[r];
    if (c >= 0) result.total_cost += cost(r, c);
  }
  return result;
}

}  // namespace mobility
