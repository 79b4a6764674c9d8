#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gptrack/common.hpp"

namespace gptrack::gpr {

/// Squared-exponential kernel hyperparameters plus observation noise.
struct Hyperparameters {
  double length_scale = 1.0;   // l
  double signal_var = 1.0;     // sigma0^2
  double noise_var = 1.0;      // sigma_v^2

  bool operator==(const Hyperparameters&) const = default;
};

/// k(x, x') = signal_var * exp(-|x - x'|^2 / (2 l^2))
double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
              const Hyperparameters& hp);

/// Gram matrix of the rows of A against the rows of B (|A| x |B|).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Hyperparameters& hp);

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
};

/// Fitted zero-mean GP regressor.
///
/// `L` is the lower Cholesky factor of K + noise_var*I (+jitter if the
/// factorization needed stabilizing) and `alpha` solves (K + noise_var*I)
/// alpha = y. `jitter` records the stabilization actually applied.
struct GpModel {
  Hyperparameters hp;
  Eigen::MatrixXd inputs;   // N x d training inputs
  Eigen::VectorXd targets;  // N training targets
  Eigen::MatrixXd L;
  Eigen::VectorXd alpha;
  double jitter = 0.0;

  int size() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
};

/// Factorize and fit. Cholesky failures retry with jitter escalating from
/// 1e-9*signal_var by factors of 10 up to 1e-3*signal_var, then throw
/// NumericalError.
GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const Hyperparameters& hp);

/// Posterior mean and variance at one query point. Variance is clamped at
/// zero from below.
Prediction predict(const GpModel& m, const Eigen::VectorXd& x);

/// Batched posterior over the rows of `queries` (one Cholesky backsolve for
/// the whole batch).
void predict_batch(const GpModel& m, const Eigen::MatrixXd& queries,
                   Eigen::VectorXd& means, Eigen::VectorXd& vars);

/// log p(y | X, hp) of the fitted model.
double log_marginal_likelihood(const GpModel& m);

/// Candidate grid for hyperparameter selection: log-spaced length scales and
/// signal variances, noise variance held fixed.
struct HyperparameterGrid {
  std::vector<double> length_scales;
  std::vector<double> signal_vars;
  double noise_var = 1.0;
};

/// 8x8 log-spaced grid over l in [0.1, 100], sigma0^2 in [1e-2, 1e4].
HyperparameterGrid default_grid(double noise_var);

/// Fit at every grid point and keep the marginal-likelihood maximizer.
/// Ties break toward the earlier grid point (scan order: length scale outer,
/// signal variance inner).
GpModel select_hyperparameters(const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd& targets,
                               const HyperparameterGrid& grid);

}  // namespace gptrack::gpr
