#pragma once

#include <cstdint>
#include <vector>

#include "gptrack/common.hpp"

namespace gptrack::kin {

/// Curvilinear target state: planar position (xi, eta) [m], speed v [m/s],
/// heading phi [rad, measured from the +xi axis, wrapped to (-pi, pi]],
/// along-track acceleration a_t and cross-track acceleration a_n [m/s^2].
struct KinematicState {
  double xi = 0.0;
  double eta = 0.0;
  double v = 0.0;
  double phi = 0.0;
  double a_t = 0.0;
  double a_n = 0.0;
};

/// Range [m] / bearing [rad] measurement from a sensor at the origin.
/// Bearing convention: atan2(xi, eta), i.e. zero along +eta, wrapped
/// to (-pi, pi].
struct Measurement {
  double r = 0.0;
  double bearing = 0.0;
};

/// All measurements of one scan. origin[i] is the index of the generating
/// target, or -1 for a false alarm.
struct MeasurementSet {
  int t = 0;
  std::vector<Measurement> meas;
  std::vector<int> origin;
};

/// Axis-aligned surveillance region, used to draw false alarms.
struct Region {
  double xi_min = -1000.0, xi_max = 1000.0;
  double eta_min = -1000.0, eta_max = 1000.0;
};

enum class Maneuver {
  kAlternatingTurns,  // fixed-rate turns, direction flipping every few steps
  kRandomAccel,       // per-step accelerations drawn from a magnitude set
  kRandomTurns,       // fixed-rate turns, direction drawn each step
  kSchedule,          // explicit per-step (a_t, a_n) schedule
};

struct ManeuverStep {
  double a_t = 0.0;
  double a_n = 0.0;
};

/// Full description of a simulated scenario (one or more targets).
struct ScenarioSpec {
  Maneuver maneuver = Maneuver::kSchedule;
  int num_steps = 100;
  double dt = 1.0;
  std::vector<KinematicState> initial_states = {KinematicState{0, 0, 15, 0, 0, 0}};

  // kAlternatingTurns / kRandomTurns
  double turn_rate = deg2rad(15.0);  // |omega| [rad/s]
  int turn_block = 10;               // steps between direction flips

  // kRandomAccel: |a| drawn uniformly from this set, sign uniform, per axis
  std::vector<double> accel_levels = {0.1, 1.0, 10.0};

  // kSchedule: schedules[k][t] for target k
  std::vector<std::vector<ManeuverStep>> schedules;

  // measurement model
  double sigma_r = 5.0;                 // range noise std [m]
  double sigma_b = deg2rad(0.5);        // bearing noise std [rad]
  double p_d = 1.0;                     // detection probability
  double lambda_fa = 0.0;               // mean false alarms per scan
  Region region;

  std::uint64_t seed = 0;
};

/// One curvilinear integration step of length dt.
///
/// Speed advances as v' = v + a_t*dt; heading turns at rate omega = a_n/v.
/// Positions follow the constant-rate arc using the midpoint speed, which
/// reduces to the exact constant-turn arc when a_t = 0 and to the exact
/// constant-acceleration straight line when a_n = 0.
///
/// When a_t != 0 the new speed is floored at kMinSpeed so a decelerating
/// target cannot stall or reverse (the turn rate a_n/v stays finite).
KinematicState step_curvilinear(const KinematicState& s, double dt);

inline constexpr double kMinSpeed = 0.1;  // [m/s]

/// Generate target `target_index`'s state sequence (length spec.num_steps).
/// The maneuver program draws from a stream keyed by (seed, target_index),
/// never by position, so a shift of the initial position shifts every
/// generated position by exactly the same offset.
std::vector<KinematicState> generate_trajectory(const ScenarioSpec& spec,
                                                int target_index = 0);

/// Noiseless range/bearing of a position.
Measurement range_bearing(double xi, double eta);

/// Noisy measurement of a state. Negative noisy ranges clamp to zero;
/// bearings wrap to (-pi, pi].
Measurement measure(const KinematicState& s, double sigma_r, double sigma_b,
                    Rng& rng);

/// Invert a measurement to a Cartesian position fix.
inline void fix_from_measurement(const Measurement& m, double& xi, double& eta) {
  xi = m.r * std::sin(m.bearing);
  eta = m.r * std::cos(m.bearing);
}

/// One scan over all targets: each is detected with probability p_d, plus
/// Poisson(lambda_fa) false alarms uniform over the region's range/bearing
/// extent. Detections and false alarms are shuffled together.
MeasurementSet generate_measurement_set(
    const std::vector<KinematicState>& states_at_t, const ScenarioSpec& spec,
    int t, Rng& rng);

/// All scans for a multi-target scenario; trajectories[k][t] indexes truth.
std::vector<MeasurementSet> generate_measurements(
    const std::vector<std::vector<KinematicState>>& trajectories,
    const ScenarioSpec& spec);

// --- canned scenarios ---

/// Training leg for the turning scenario: 20 steps, alternating +-15 deg/s
/// turns flipping every 10 steps (left first), v = 15 m/s, heading 0.
ScenarioSpec s1_train(std::uint64_t seed);

/// Evaluation leg of the turning scenario: same maneuver program, 100 steps.
ScenarioSpec s1_test(std::uint64_t seed);

/// Random-acceleration scenario: per-step (a_t, a_n) with magnitudes drawn
/// from {0.1, 1, 10} m/s^2 and independent random signs.
ScenarioSpec s2_train(std::uint64_t seed);  // 1000 steps
ScenarioSpec s2_test(std::uint64_t seed);   // 100 steps

/// Random-direction turning scenario: +-15 deg/s, sign redrawn every step.
ScenarioSpec s3_test(std::uint64_t seed);  // 100 steps

}  // namespace gptrack::kin
