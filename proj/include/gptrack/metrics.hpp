#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gptrack/common.hpp"

namespace gptrack::metrics {

/// Accumulates squared position errors across steps and runs; rmse() is the
/// root of the pooled mean.
class SquaredErrorAccumulator {
 public:
  void add(double squared_error) {
    sum_ += squared_error;
    ++n_;
  }
  void add_pair(const Eigen::Vector2d& truth, const Eigen::Vector2d& est) {
    add((truth - est).squaredNorm());
  }
  double rmse() const {
    if (n_ == 0) throw DataError("rmse: no samples");
    return std::sqrt(sum_ / static_cast<double>(n_));
  }
  std::size_t count() const { return n_; }

 private:
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

/// Pooled position RMSE of two equal-length sequences.
double rmse(const std::vector<Eigen::Vector2d>& truth,
            const std::vector<Eigen::Vector2d>& est);

/// Minimum-cost injective assignment of the smaller side of `cost` into the
/// larger. Returns, per row, the assigned column or -1 (rows can only be
/// left out when there are more rows than columns).
std::vector<int> optimal_assignment(const Eigen::MatrixXd& cost);

struct GospaParams {
  double c = 10.0;   // cutoff distance [m]
  double alpha = 2.0;
  double p = 2.0;
};

/// Generalized OSPA distance between two unordered point sets: the best
/// cutoff-capped assignment cost plus (c^p / alpha) per cardinality-mismatch
/// point, all to the power 1/p.
double gospa(const std::vector<Eigen::Vector2d>& truth,
             const std::vector<Eigen::Vector2d>& est,
             const GospaParams& params = {});

}  // namespace gptrack::metrics
