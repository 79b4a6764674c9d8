#include "gptrack/nsim.hpp"

#include <limits>

namespace gptrack::nsim {

Eigen::MatrixXd velocity_deltas(const std::vector<Eigen::Vector2d>& positions) {
  if (positions.size() < 2)
    throw DataError("nsim: need at least two positions to form a delta");
  Eigen::MatrixXd d(positions.size() - 1, 2);
  for (std::size_t i = 0; i + 1 < positions.size(); ++i)
    d.row(i) = (positions[i + 1] - positions[i]).transpose();
  return d;
}

void build_training_set(
    const std::vector<std::vector<Eigen::Vector2d>>& trajectories,
    Eigen::MatrixXd& inputs, Eigen::VectorXd& targets_xi,
    Eigen::VectorXd& targets_eta) {
  if (trajectories.empty()) throw DataError("nsim: no training trajectories");
  std::size_t n_pairs = 0;
  for (const auto& tr : trajectories) {
    if (tr.size() < 3)
      throw DataError("nsim: each training trajectory needs >= 3 positions");
    n_pairs += tr.size() - 2;
  }
  inputs.resize(n_pairs, 2);
  targets_xi.resize(n_pairs);
  targets_eta.resize(n_pairs);
  std::size_t row = 0;
  for (const auto& tr : trajectories) {
    const Eigen::MatrixXd d = velocity_deltas(tr);
    for (Eigen::Index i = 0; i + 1 < d.rows(); ++i, ++row) {
      inputs.row(row) = d.row(i);
      targets_xi[row] = d(i + 1, 0);
      targets_eta[row] = d(i + 1, 1);
    }
  }
}

namespace {

// Joint selection: maximize the sum of per-axis marginal likelihoods over the
// grid, forcing both axes onto one hyperparameter point.
void select_shared(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_xi,
                   const Eigen::VectorXd& y_eta,
                   const gpr::HyperparameterGrid& grid, gpr::GpModel& m_xi,
                   gpr::GpModel& m_eta) {
  if (grid.length_scales.empty() || grid.signal_vars.empty())
    throw ConfigError("nsim: empty hyperparameter grid");
  double best = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (double l : grid.length_scales)
    for (double s0 : grid.signal_vars) {
      const gpr::Hyperparameters hp{l, s0, grid.noise_var};
      gpr::GpModel cx = gpr::fit(X, y_xi, hp);
      gpr::GpModel ce = gpr::fit(X, y_eta, hp);
      const double lml =
          gpr::log_marginal_likelihood(cx) + gpr::log_marginal_likelihood(ce);
      if (!have || lml > best) {
        m_xi = std::move(cx);
        m_eta = std::move(ce);
        best = lml;
        have = true;
      }
    }
}

}  // namespace

NsimModel train(const std::vector<std::vector<Eigen::Vector2d>>& trajectories,
                const TrainOptions& opts) {
  Eigen::MatrixXd X;
  Eigen::VectorXd y_xi, y_eta;
  build_training_set(trajectories, X, y_xi, y_eta);

  NsimModel m;
  m.shared_hyperparameters = opts.shared_hyperparameters;
  m.dt = opts.dt;
  if (!opts.use_grid) {
    m.gp_xi = gpr::fit(X, y_xi, opts.fixed_hp);
    m.gp_eta = gpr::fit(X, y_eta, opts.fixed_hp);
  } else if (opts.shared_hyperparameters) {
    select_shared(X, y_xi, y_eta, opts.grid, m.gp_xi, m.gp_eta);
  } else {
    m.gp_xi = gpr::select_hyperparameters(X, y_xi, opts.grid);
    m.gp_eta = gpr::select_hyperparameters(X, y_eta, opts.grid);
  }
  return m;
}

NsimModel train(const std::vector<Eigen::Vector2d>& trajectory,
                const TrainOptions& opts) {
  return train(std::vector<std::vector<Eigen::Vector2d>>{trajectory}, opts);
}

void predict_delta_batch(const NsimModel& m, const Eigen::MatrixXd& cur,
                         Eigen::VectorXd& mean_xi, Eigen::VectorXd& var_xi,
                         Eigen::VectorXd& mean_eta, Eigen::VectorXd& var_eta) {
  if (cur.cols() != 2) throw DataError("nsim: queries must be M x 2");
  const bool fused = m.shared_hyperparameters && m.gp_xi.hp == m.gp_eta.hp &&
                     m.gp_xi.size() == m.gp_eta.size();
  if (fused) {
    // One kernel evaluation + one triangular solve serves both axes.
    const Eigen::MatrixXd Kt = gpr::kernel_matrix(m.gp_xi.inputs, cur, m.gp_xi.hp);
    mean_xi.noalias() = Kt.transpose() * m.gp_xi.alpha;
    mean_eta.noalias() = Kt.transpose() * m.gp_eta.alpha;
    const Eigen::MatrixXd V = m.gp_xi.L.triangularView<Eigen::Lower>().solve(Kt);
    var_xi = (m.gp_xi.hp.signal_var -
              V.colwise().squaredNorm().transpose().array())
                 .max(0.0)
                 .matrix();
    var_eta = var_xi;
  } else {
    gpr::predict_batch(m.gp_xi, cur, mean_xi, var_xi);
    gpr::predict_batch(m.gp_eta, cur, mean_eta, var_eta);
  }
}

void predict_delta(const NsimModel& m, const Eigen::Vector2d& cur,
                   Eigen::Vector2d& mean, Eigen::Vector2d& var) {
  Eigen::MatrixXd q(1, 2);
  q.row(0) = cur.transpose();
  Eigen::VectorXd mx, vx, me, ve;
  predict_delta_batch(m, q, mx, vx, me, ve);
  mean = {mx[0], me[0]};
  var = {vx[0], ve[0]};
}

std::vector<Eigen::Vector2d> positions_of(
    const std::vector<kin::KinematicState>& traj) {
  std::vector<Eigen::Vector2d> p;
  p.reserve(traj.size());
  for (const auto& s : traj) p.emplace_back(s.xi, s.eta);
  return p;
}

}  // namespace gptrack::nsim
