#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gptrack/assoc.hpp"
#include "gptrack/nsim.hpp"
#include "gptrack/pf.hpp"

namespace gptrack::mtt {

struct MttConfig {
  int num_particles = 500;        // per target
  double q_xi = 1.0;
  double q_eta = 1.0;
  double sigma_r = 5.0;
  double sigma_b = deg2rad(0.5);
  double p_d = 1.0;
  double lambda_fa = 0.0;
  assoc::BpConfig bp;
  pf::ResampleMode resample_mode = pf::ResampleMode::kEveryStep;
  double ess_fraction = 0.5;
  double pos_spread = 0.0;        // 0 = 2*sigma_r (as in pf)
  double vel_spread = 0.0;        // 0 = sqrt(2)*pos_spread
  /// Add p(a=0)*(1-P_D) to each particle's update factor. Off by default:
  /// the association-weighted update then sums detection hypotheses only.
  bool missed_detection_term = false;
  std::uint64_t seed = 0;
  /// RNG stream key per target slot; defaults to the slot index. Carrying
  /// the key along when targets are reordered keeps outputs permutation-
  /// equivariant.
  std::vector<std::uint64_t> target_keys;

  double init_pos_spread() const {
    return pos_spread > 0.0 ? pos_spread : 2.0 * sigma_r;
  }
  double init_vel_spread() const {
    return vel_spread > 0.0 ? vel_spread : std::sqrt(2.0) * init_pos_spread();
  }
};

struct StepDiagnostics {
  bool bp_converged = true;
  int bp_iterations = 0;
  std::vector<double> ess;  // per target, post-update
};

struct MttResult {
  std::vector<std::vector<pf::Particle>> estimates;  // [t][k]
  std::vector<Eigen::MatrixXd> marginals;            // [t] K x (Kt+1)
  std::vector<StepDiagnostics> diagnostics;          // per scan
  int respread_events = 0;
};

/// Association-weighted update: per particle, factor =
/// sum_kappa p(y_kappa | x) * p(a = kappa) (+ p(a=0)*(1-p_d) when
/// missed_term). A scan with no measurements leaves weights unchanged.
void weight_update_mtt(pf::ParticleSet& ps, const kin::MeasurementSet& scan,
                       const Eigen::VectorXd& marginals_row, double sigma_r,
                       double sigma_b, double p_d, bool missed_term);

/// Multi-target tracker with a fixed, known target count. Scan 0 seeds the
/// per-target clouds around init_centers; each later scan runs propagate ->
/// association factors -> loopy BP -> association-weighted update ->
/// estimate -> resample. Degenerate weights re-spread a target around its
/// best-associated measurement fix.
MttResult track_mtt(const nsim::NsimModel& model,
                    const std::vector<kin::MeasurementSet>& scans,
                    const std::vector<pf::Particle>& init_centers,
                    const MttConfig& cfg);

}  // namespace gptrack::mtt
