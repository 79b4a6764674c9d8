#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gptrack/kinematics.hpp"
#include "gptrack/pf.hpp"

namespace gptrack::baselines {

/// Particle population over the curvilinear state (position, speed, heading).
struct KinParticleSet {
  Eigen::VectorXd xi, eta, v, phi, w;
  int size() const { return static_cast<int>(xi.size()); }
};

struct BaselineConfig {
  int num_particles = 200;
  double q_xi = 1.0;
  double q_eta = 1.0;
  double sigma_r = 5.0;
  double sigma_b = deg2rad(0.5);
  double dt = 1.0;
  pf::ResampleMode resample_mode = pf::ResampleMode::kEveryStep;
  double ess_fraction = 0.5;
  double pos_spread = 0.0;      // 0 = 2*sigma_r
  double speed_spread = 0.0;    // init jitter on v
  double heading_spread = 0.0;  // init jitter on phi [rad]
  std::uint64_t seed = 0;
  std::uint64_t target_key = 0;

  double init_pos_spread() const {
    return pos_spread > 0.0 ? pos_spread : 2.0 * sigma_r;
  }
};

/// Benchmark filter: particles advance through the true kinematics with the
/// true per-step accelerations (read from `truth`), plus position process
/// noise; measurement update and resampling follow the same machinery as the
/// learned-model filter. An empty optional marks a missed detection (no
/// update that scan). Initialized around the true initial state.
pf::SttResult track_oracle_pf(
    const std::vector<kin::KinematicState>& truth,
    const std::vector<std::optional<kin::Measurement>>& meas,
    const BaselineConfig& cfg);

/// Dense-measurement convenience overload (one detection per scan).
pf::SttResult track_oracle_pf(const std::vector<kin::KinematicState>& truth,
                              const std::vector<kin::Measurement>& meas,
                              const BaselineConfig& cfg);

/// One motion hypothesis of an IMM bank. turn_rate != 0 marks a
/// constant-rate turn (a_n follows the particle's speed); otherwise a_t/a_n
/// are applied directly, with signs redrawn per particle and step when
/// randomize_signs is set.
struct ImmModel {
  double a_t = 0.0;
  double a_n = 0.0;
  double turn_rate = 0.0;  // [rad/s]
  bool randomize_signs = false;
};

struct ImmConfig {
  std::vector<ImmModel> models;
  Eigen::MatrixXd transition;     // row-stochastic J x J
  Eigen::VectorXd initial_probs;  // length J
};

/// Two constant-rate turn hypotheses (+rate / -rate).
ImmConfig imm2_turning(double rate = deg2rad(15.0), double self_prob = 0.95);

/// Nine hypotheses: (|a_t|, |a_n|) over {levels x levels}, random signs.
ImmConfig imm9_accel(const std::vector<double>& levels = {0.1, 1.0, 10.0},
                     double self_prob = 0.95);

struct ImmResult {
  pf::SttResult track;
  Eigen::MatrixXd model_probs;  // T x J
};

/// Canonical IMM particle-filter cycle: interaction (mix particles across
/// models via the switching prior), per-model propagate + weight, model
/// likelihood = mean unnormalized weight, model-probability update, combined
/// probability-weighted estimate, per-model resampling. Initialized around
/// `init_state`.
ImmResult track_imm_pf(const ImmConfig& imm,
                       const kin::KinematicState& init_state,
                       const std::vector<std::optional<kin::Measurement>>& meas,
                       const BaselineConfig& cfg);

ImmResult track_imm_pf(const ImmConfig& imm,
                       const kin::KinematicState& init_state,
                       const std::vector<kin::Measurement>& meas,
                       const BaselineConfig& cfg);

}  // namespace gptrack::baselines
