#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gptrack/common.hpp"
#include "gptrack/kinematics.hpp"
#include "gptrack/nsim.hpp"

namespace gptrack::pf {

/// Filter state of one particle: position and last position delta.
struct Particle {
  double xi = 0.0;
  double eta = 0.0;
  double dxi = 0.0;
  double deta = 0.0;
};

/// Structure-of-arrays particle population with normalized weights.
struct ParticleSet {
  Eigen::VectorXd xi, eta, dxi, deta, w;

  int size() const { return static_cast<int>(xi.size()); }
  Particle at(int m) const { return {xi[m], eta[m], dxi[m], deta[m]}; }
  static ParticleSet zeros(int m);
};

enum class ResampleMode { kEveryStep, kEssThreshold };

struct FilterConfig {
  int num_particles = 200;
  double q_xi = 1.0;              // position process-noise variance [m^2]
  double q_eta = 1.0;
  double sigma_r = 5.0;           // measurement noise stds
  double sigma_b = deg2rad(0.5);
  ResampleMode resample_mode = ResampleMode::kEveryStep;
  double ess_fraction = 0.5;      // resample when ESS < fraction * M
  double pos_spread = 0.0;        // init position std; 0 = 2*sigma_r
  double vel_spread = 0.0;        // init delta std; 0 = sqrt(2)*pos_spread
  std::uint64_t seed = 0;
  std::uint64_t target_key = 0;   // RNG stream slot for this target

  double init_pos_spread() const {
    return pos_spread > 0.0 ? pos_spread : 2.0 * sigma_r;
  }
  double init_vel_spread() const {
    return vel_spread > 0.0 ? vel_spread : std::sqrt(2.0) * init_pos_spread();
  }
};

/// Gaussian cloud around a center particle.
ParticleSet initialize_particles(const Particle& center, double pos_spread,
                                 double vel_spread, int num_particles, Rng& rng);

/// Center particle from the first one or two measurement fixes: position at
/// the first fix, delta at the fix difference (zero if only one fix).
Particle center_from_fixes(const kin::Measurement& first,
                           const kin::Measurement* second);

/// Cloud seeded from measurement fixes alone (no prior state): needs at
/// least two fixes to place the delta component.
ParticleSet initialize_from_fixes(const std::vector<kin::Measurement>& fixes,
                                  double pos_spread, double vel_spread,
                                  int num_particles, Rng& rng);

/// Bootstrap proposal: per particle, draw the next delta from the motion
/// model's predictive Gaussian, then the next position around
/// (position + new delta) with process noise (q_xi, q_eta). Weights are
/// untouched. Draws come from per-(target, step, particle) streams.
void propagate(ParticleSet& ps, const nsim::NsimModel& model,
               const FilterConfig& cfg, int t);

/// Range/bearing measurement density at a position (full normalization,
/// bearing residual wrapped).
double measurement_likelihood(double xi, double eta, const kin::Measurement& z,
                              double sigma_r, double sigma_b);

/// Multiply weights by the measurement likelihood and renormalize. Throws
/// DegenerateWeightsError when every unnormalized weight underflows.
void weight_update_stt(ParticleSet& ps, const kin::Measurement& z,
                       double sigma_r, double sigma_b);

/// Effective sample size (Sum w)^2 / Sum w^2.
double ess(const ParticleSet& ps);

/// Weighted-mean state estimate.
Particle estimate(const ParticleSet& ps);

/// Systematic (low-variance) resampling; offspring counts stay within one of
/// num_particles * weight. Weights reset to uniform.
void systematic_resample(ParticleSet& ps, Rng& rng);

struct SttResult {
  std::vector<Particle> estimates;  // one per scan
  std::vector<double> ess;          // post-update ESS per scan
  std::vector<int> respread_steps;  // scans where weights degenerated
};

/// Single-target tracker over one measurement per scan. Initializes from the
/// first two fixes, then per scan: propagate, weight, estimate, resample.
/// Degenerate weights re-spread the cloud around the scan's fix (3*sigma_r)
/// and are recorded rather than fatal.
SttResult track_stt(const nsim::NsimModel& model,
                    const std::vector<kin::Measurement>& meas,
                    const FilterConfig& cfg);

}  // namespace gptrack::pf
