#include "gptrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gptrack::metrics {

double rmse(const std::vector<Eigen::Vector2d>& truth,
            const std::vector<Eigen::Vector2d>& est) {
  if (truth.size() != est.size())
    throw DataError("rmse: sequence lengths differ");
  SquaredErrorAccumulator acc;
  for (std::size_t i = 0; i < truth.size(); ++i) acc.add_pair(truth[i], est[i]);
  return acc.rmse();
}

namespace {

// Jonker-Volgenant style shortest augmenting paths with dual potentials;
// requires n <= m. Returns row -> column (all rows assigned).
std::vector<int> assign_rows(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = inf;
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
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

std::vector<int> optimal_assignment(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw DataError("assignment: non-finite costs");
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n == 0 || m == 0) return std::vector<int>(n, -1);
  if (n <= m) return assign_rows(cost);
  const std::vector<int> col_to_row = assign_rows(cost.transpose());
  std::vector<int> row_to_col(n, -1);
  for (int j = 0; j < m; ++j) row_to_col[col_to_row[j]] = j;
  return row_to_col;
}

double gospa(const std::vector<Eigen::Vector2d>& truth,
             const std::vector<Eigen::Vector2d>& est,
             const GospaParams& params) {
  if (!(params.c > 0.0)) throw ConfigError("gospa: c must be positive");
  if (!(params.alpha > 0.0 && params.alpha <= 2.0))
    throw ConfigError("gospa: alpha must lie in (0, 2]");
  if (!(params.p >= 1.0) || !std::isfinite(params.p))
    throw ConfigError("gospa: p must lie in [1, inf)");

  const std::vector<Eigen::Vector2d>* small = &truth;
  const std::vector<Eigen::Vector2d>* large = &est;
  if (small->size() > large->size()) std::swap(small, large);

  const int n = static_cast<int>(small->size());
  const int m = static_cast<int>(large->size());
  const double cp = std::pow(params.c, params.p);
  double total = cp / params.alpha * static_cast<double>(m - n);
  if (n > 0) {
    Eigen::MatrixXd cost(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        const double d = std::min(((*small)[i] - (*large)[j]).norm(), params.c);
        cost(i, j) = std::pow(d, params.p);
      }
    const std::vector<int> asg = optimal_assignment(cost);
    for (int i = 0; i < n; ++i) total += cost(i, asg[i]);
  }
  return std::pow(total, 1.0 / params.p);
}

}  // namespace gptrack::metrics
