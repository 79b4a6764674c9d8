#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gptrack/gpr.hpp"
#include "gptrack/kinematics.hpp"

namespace gptrack::nsim {

/// Shift-invariant motion model: one GP per Cartesian axis mapping the
/// current velocity delta (2-D) to the next delta on that axis. Both GPs
/// share the same training inputs; by default they also share kernel
/// hyperparameters, selected jointly.
struct NsimModel {
  gpr::GpModel gp_xi;
  gpr::GpModel gp_eta;
  bool shared_hyperparameters = true;
  double dt = 1.0;
};

struct TrainOptions {
  bool shared_hyperparameters = true;
  bool use_grid = true;               // false: fit at fixed_hp directly
  gpr::HyperparameterGrid grid;       // ignored unless use_grid
  gpr::Hyperparameters fixed_hp;      // ignored when use_grid
  double dt = 1.0;

  static TrainOptions with_default_grid(double noise_var, double dt = 1.0) {
    TrainOptions o;
    o.grid = gpr::default_grid(noise_var);
    o.dt = dt;
    return o;
  }
};

/// Consecutive position differences: N+1 positions -> N x 2 deltas.
Eigen::MatrixXd velocity_deltas(const std::vector<Eigen::Vector2d>& positions);

/// Stack (delta_t -> delta_{t+1}) pairs from each trajectory; pairs never
/// straddle a trajectory boundary. Each trajectory needs >= 3 positions.
void build_training_set(
    const std::vector<std::vector<Eigen::Vector2d>>& trajectories,
    Eigen::MatrixXd& inputs, Eigen::VectorXd& targets_xi,
    Eigen::VectorXd& targets_eta);

NsimModel train(const std::vector<std::vector<Eigen::Vector2d>>& trajectories,
                const TrainOptions& opts);
NsimModel train(const std::vector<Eigen::Vector2d>& trajectory,
                const TrainOptions& opts);

/// Per-axis predictive mean/variance of the next delta given current deltas
/// (rows of `cur`). With shared hyperparameters the two axes reuse one
/// factorization and one backsolve.
void predict_delta_batch(const NsimModel& m, const Eigen::MatrixXd& cur,
                         Eigen::VectorXd& mean_xi, Eigen::VectorXd& var_xi,
                         Eigen::VectorXd& mean_eta, Eigen::VectorXd& var_eta);

/// Single-query convenience wrapper.
void predict_delta(const NsimModel& m, const Eigen::Vector2d& cur,
                   Eigen::Vector2d& mean, Eigen::Vector2d& var);

/// Positions of a state sequence.
std::vector<Eigen::Vector2d> positions_of(
    const std::vector<kin::KinematicState>& traj);

}  // namespace gptrack::nsim
