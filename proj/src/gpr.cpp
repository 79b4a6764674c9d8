#include "gptrack/gpr.hpp"

#include <cmath>
#include <limits>

namespace gptrack::gpr {

namespace {

void check_hp(const Hyperparameters& hp) {
  if (!(hp.length_scale > 0.0) || !std::isfinite(hp.length_scale))
    throw ConfigError("gpr: length_scale must be positive");
  if (!(hp.signal_var > 0.0) || !std::isfinite(hp.signal_var))
    throw ConfigError("gpr: signal_var must be positive");
  if (hp.noise_var < 0.0 || !std::isfinite(hp.noise_var))
    throw ConfigError("gpr: noise_var must be non-negative");
}

}  // namespace

double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
              const Hyperparameters& hp) {
  check_hp(hp);
  if (a.size() != b.size()) throw DataError("gpr: kernel input dims differ");
  const double d2 = (a - b).squaredNorm();
  return hp.signal_var * std::exp(-d2 / (2.0 * hp.length_scale * hp.length_scale));
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Hyperparameters& hp) {
  check_hp(hp);
  if (A.cols() != B.cols()) throw DataError("gpr: kernel input dims differ");
  // |a-b|^2 = |a|^2 + |b|^2 - 2 a.b, computed as one GEMM.
  const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = B.rowwise().squaredNorm();
  Eigen::MatrixXd D = (-2.0 * A * B.transpose());
  D.colwise() += a2;
  D.rowwise() += b2.transpose();
  const double inv2l2 = 1.0 / (2.0 * hp.length_scale * hp.length_scale);
  return hp.signal_var * (-inv2l2 * D.cwiseMax(0.0)).array().exp();
}

GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const Hyperparameters& hp) {
  check_hp(hp);
  if (inputs.rows() == 0) throw DataError("gpr: empty training set");
  if (inputs.rows() != targets.size())
    throw DataError("gpr: inputs/targets length mismatch");
  if (!inputs.allFinite() || !targets.allFinite())
    throw DataError("gpr: non-finite training data");

  GpModel m;
  m.hp = hp;
  m.inputs = inputs;
  m.targets = targets;

  const Eigen::MatrixXd K = kernel_matrix(inputs, inputs, hp);

  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd Kn = K;
    Kn.diagonal().array() += hp.noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kn);
    if (llt.info() == Eigen::Success) {
      m.L = llt.matrixL();
      m.alpha = llt.solve(targets);
      m.jitter = jitter;
      return m;
    }
    if (jitter == 0.0)
      jitter = 1e-9 * hp.signal_var;
    else if (jitter < 1e-3 * hp.signal_var * 0.999)
      jitter *= 10.0;
    else
      throw NumericalError("gpr: Cholesky failed despite maximum jitter");
  }
}

Prediction predict(const GpModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.dim()) throw DataError("gpr: query dimension mismatch");
  Eigen::MatrixXd q(1, x.size());
  q.row(0) = x;
  Eigen::VectorXd mean, var;
  predict_batch(m, q, mean, var);
  return {mean[0], var[0]};
}

void predict_batch(const GpModel& m, const Eigen::MatrixXd& queries,
                   Eigen::VectorXd& means, Eigen::VectorXd& vars) {
  if (queries.cols() != m.dim()) throw DataError("gpr: query dimension mismatch");
  const Eigen::MatrixXd Kt = kernel_matrix(m.inputs, queries, m.hp);  // N x M
  means.noalias() = Kt.transpose() * m.alpha;
  Eigen::MatrixXd V = m.L.triangularView<Eigen::Lower>().solve(Kt);
  vars = (m.hp.signal_var - V.colwise().squaredNorm().transpose().array())
             .max(0.0)
             .matrix();
}

double log_marginal_likelihood(const GpModel& m) {
  const int n = m.size();
  const double quad = m.targets.dot(m.alpha);
  const double logdet = m.L.diagonal().array().log().sum();
  return -0.5 * quad - logdet - 0.5 * n * std::log(2.0 * kPi);
}

HyperparameterGrid default_grid(double noise_var) {
  auto log_space = [](double lo, double hi, int n) {
    std::vector<double> v(n);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i)
      v[i] = std::exp(a + (b - a) * i / static_cast<double>(n - 1));
    return v;
  };
  HyperparameterGrid g;
  g.length_scales = log_space(0.1, 100.0, 8);
  g.signal_vars = log_space(1e-2, 1e4, 8);
  g.noise_var = noise_var;
  return g;
}

GpModel select_hyperparameters(const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd& targets,
                               const HyperparameterGrid& grid) {
  if (grid.length_scales.empty() || grid.signal_vars.empty())
    throw ConfigError("gpr: empty hyperparameter grid");
  GpModel best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (double l : grid.length_scales)
    for (double s0 : grid.signal_vars) {
      GpModel cand = fit(inputs, targets, {l, s0, grid.noise_var});
      const double lml = log_marginal_likelihood(cand);
      if (!have || lml > best_lml) {
        best = std::move(cand);
        best_lml = lml;
        have = true;
      }
    }
  return best;
}

}  // namespace gptrack::gpr
