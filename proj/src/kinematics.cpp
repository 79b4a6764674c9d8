#include "gptrack/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace gptrack::kin {

namespace {

bool all_finite(const KinematicState& s) {
  return std::isfinite(s.xi) && std::isfinite(s.eta) && std::isfinite(s.v) &&
         std::isfinite(s.phi) && std::isfinite(s.a_t) && std::isfinite(s.a_n);
}

}  // namespace

KinematicState step_curvilinear(const KinematicState& s, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw DataError("step_curvilinear: dt must be positive and finite");
  if (!all_finite(s))
    throw DataError("step_curvilinear: non-finite state");
  if (s.a_n != 0.0 && s.v <= 0.0)
    throw DataError("step_curvilinear: turning requires positive speed");

  double v1 = s.v + s.a_t * dt;
  if (s.a_t != 0.0 && v1 < kMinSpeed) v1 = kMinSpeed;

  const double omega = (s.a_n == 0.0) ? 0.0 : s.a_n / s.v;
  const double v_mid = 0.5 * (s.v + v1);
  const double dphi = omega * dt;

  double dxi, deta;
  if (omega == 0.0) {
    const double dist = v_mid * dt;
    dxi = dist * std::cos(s.phi);
    deta = dist * std::sin(s.phi);
  } else {
    const double radius = v_mid / omega;
    dxi = radius * (std::sin(s.phi + dphi) - std::sin(s.phi));
    deta = radius * (std::cos(s.phi) - std::cos(s.phi + dphi));
  }

  return {s.xi + dxi, s.eta + deta, v1, wrap_angle(s.phi + dphi), s.a_t, s.a_n};
}

namespace {

// Per-step maneuver program. Depends on (rng, step, current speed) only,
// never on position.
ManeuverStep next_maneuver(const ScenarioSpec& spec, int k, int t,
                           const KinematicState& s, Rng& rng) {
  switch (spec.maneuver) {
    case Maneuver::kAlternatingTurns: {
      if (spec.turn_block <= 0)
        throw ConfigError("scenario: turn_block must be positive");
      const int block = t / spec.turn_block;
      const double sign = (block % 2 == 0) ? +1.0 : -1.0;
      return {0.0, sign * spec.turn_rate * s.v};
    }
    case Maneuver::kRandomTurns: {
      std::uniform_int_distribution<int> coin(0, 1);
      const double sign = coin(rng) ? +1.0 : -1.0;
      return {0.0, sign * spec.turn_rate * s.v};
    }
    case Maneuver::kRandomAccel: {
      if (spec.accel_levels.empty())
        throw ConfigError("scenario: accel_levels must be non-empty");
      std::uniform_int_distribution<std::size_t> pick(0, spec.accel_levels.size() - 1);
      std::uniform_int_distribution<int> coin(0, 1);
      const double at = spec.accel_levels[pick(rng)] * (coin(rng) ? +1.0 : -1.0);
      const double an = spec.accel_levels[pick(rng)] * (coin(rng) ? +1.0 : -1.0);
      return {at, an};
    }
    case Maneuver::kSchedule: {
      if (k >= static_cast<int>(spec.schedules.size()) ||
          t >= static_cast<int>(spec.schedules[k].size()))
        throw ConfigError("scenario: schedule missing for target/step");
      return spec.schedules[k][t];
    }
  }
  throw ConfigError("scenario: unknown maneuver kind");
}

}  // namespace

std::vector<KinematicState> generate_trajectory(const ScenarioSpec& spec,
                                                int target_index) {
  if (spec.num_steps <= 0)
    throw ConfigError("scenario: num_steps must be positive");
  if (target_index < 0 ||
      target_index >= static_cast<int>(spec.initial_states.size()))
    throw ConfigError("scenario: target index out of range");

  Rng rng = make_rng(spec.seed, {stream::kTrajectory,
                                 static_cast<std::uint64_t>(target_index)});
  const KinematicState& init = spec.initial_states[target_index];

  // Integrate displacements from the origin and add the initial position as
  // a final single rounding, so shifting the start shifts every output by
  // exactly the shift (bit-exact for a start at the origin).
  KinematicState rel{0.0, 0.0, init.v, init.phi, 0.0, 0.0};
  std::vector<KinematicState> traj;
  traj.reserve(spec.num_steps);
  for (int t = 0; t < spec.num_steps; ++t) {
    const ManeuverStep u = next_maneuver(spec, target_index, t, rel, rng);
    rel.a_t = u.a_t;
    rel.a_n = u.a_n;
    KinematicState out = rel;
    out.xi += init.xi;
    out.eta += init.eta;
    traj.push_back(out);
    if (t + 1 < spec.num_steps) rel = step_curvilinear(rel, spec.dt);
  }
  return traj;
}

Measurement range_bearing(double xi, double eta) {
  const double r = std::hypot(xi, eta);
  if (r == 0.0)
    throw DataError("range_bearing: bearing undefined at the sensor origin");
  return {r, std::atan2(xi, eta)};
}

Measurement measure(const KinematicState& s, double sigma_r, double sigma_b,
                    Rng& rng) {
  if (sigma_r < 0.0 || sigma_b < 0.0)
    throw ConfigError("measure: noise stds must be non-negative");
  Measurement m = range_bearing(s.xi, s.eta);
  std::normal_distribution<double> n01(0.0, 1.0);
  if (sigma_r > 0.0) m.r += sigma_r * n01(rng);
  if (sigma_b > 0.0) m.bearing += sigma_b * n01(rng);
  m.r = std::max(m.r, 0.0);
  m.bearing = wrap_angle(m.bearing);
  return m;
}

namespace {

// Range/bearing extent of a rectangle seen from the origin, used as the
// false-alarm sampling box.
struct RbBox {
  double r_lo, r_hi, b_lo, b_hi;
};

RbBox rb_box(const Region& reg) {
  if (!(reg.xi_min <= reg.xi_max) || !(reg.eta_min <= reg.eta_max))
    throw ConfigError("region: min must not exceed max");
  const double cx[2] = {reg.xi_min, reg.xi_max};
  const double cy[2] = {reg.eta_min, reg.eta_max};

  double r_hi = 0.0;
  for (double x : cx)
    for (double y : cy) r_hi = std::max(r_hi, std::hypot(x, y));

  const double dx = std::max({reg.xi_min, -reg.xi_max, 0.0});
  const double dy = std::max({reg.eta_min, -reg.eta_max, 0.0});
  const double r_lo = std::hypot(dx, dy);

  const bool origin_inside = reg.xi_min <= 0.0 && 0.0 <= reg.xi_max &&
                             reg.eta_min <= 0.0 && 0.0 <= reg.eta_max;
  // The bearing cut sits on the ray {xi = 0, eta < 0}; fall back to the full
  // circle when the rectangle touches it (or contains the origin).
  const bool crosses_cut = reg.xi_min <= 0.0 && 0.0 <= reg.xi_max && reg.eta_min < 0.0;
  if (origin_inside || crosses_cut) return {r_lo, r_hi, -kPi, kPi};

  double b_lo = kPi, b_hi = -kPi;
  for (double x : cx)
    for (double y : cy) {
      const double b = std::atan2(x, y);
      b_lo = std::min(b_lo, b);
      b_hi = std::max(b_hi, b);
    }
  return {r_lo, r_hi, b_lo, b_hi};
}

}  // namespace

MeasurementSet generate_measurement_set(
    const std::vector<KinematicState>& states_at_t, const ScenarioSpec& spec,
    int t, Rng& rng) {
  if (spec.p_d < 0.0 || spec.p_d > 1.0)
    throw ConfigError("scenario: p_d must lie in [0, 1]");
  if (spec.lambda_fa < 0.0)
    throw ConfigError("scenario: lambda_fa must be non-negative");

  MeasurementSet set;
  set.t = t;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t k = 0; k < states_at_t.size(); ++k) {
    if (u01(rng) < spec.p_d) {
      set.meas.push_back(measure(states_at_t[k], spec.sigma_r, spec.sigma_b, rng));
      set.origin.push_back(static_cast<int>(k));
    }
  }

  if (spec.lambda_fa > 0.0) {
    std::poisson_distribution<int> n_fa(spec.lambda_fa);
    const RbBox box = rb_box(spec.region);
    const int n = n_fa(rng);
    for (int i = 0; i < n; ++i) {
      std::uniform_real_distribution<double> ur(box.r_lo, box.r_hi);
      std::uniform_real_distribution<double> ub(box.b_lo, box.b_hi);
      set.meas.push_back({ur(rng), wrap_angle(ub(rng))});
      set.origin.push_back(-1);
    }
  }

  // Shuffle so measurement order carries no information.
  for (std::size_t i = set.meas.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    const std::size_t j = pick(rng);
    std::swap(set.meas[i - 1], set.meas[j]);
    std::swap(set.origin[i - 1], set.origin[j]);
  }
  return set;
}

std::vector<MeasurementSet> generate_measurements(
    const std::vector<std::vector<KinematicState>>& trajectories,
    const ScenarioSpec& spec) {
  if (trajectories.empty())
    throw DataError("generate_measurements: no trajectories");
  const std::size_t T = trajectories.front().size();
  for (const auto& tr : trajectories)
    if (tr.size() != T)
      throw DataError("generate_measurements: trajectory lengths differ");

  Rng rng = make_rng(spec.seed, {stream::kMeasurement});
  std::vector<MeasurementSet> sets;
  sets.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<KinematicState> states;
    states.reserve(trajectories.size());
    for (const auto& tr : trajectories) states.push_back(tr[t]);
    sets.push_back(generate_measurement_set(states, spec, static_cast<int>(t), rng));
  }
  return sets;
}

namespace {

ScenarioSpec base_spec(std::uint64_t seed) {
  ScenarioSpec s;
  s.seed = seed;
  s.dt = 1.0;
  s.sigma_r = 5.0;
  s.sigma_b = deg2rad(0.5);
  s.p_d = 1.0;
  s.lambda_fa = 0.0;
  return s;
}

}  // namespace

ScenarioSpec s1_train(std::uint64_t seed) {
  ScenarioSpec s = base_spec(seed);
  s.maneuver = Maneuver::kAlternatingTurns;
  s.num_steps = 20;
  s.turn_rate = deg2rad(15.0);
  s.turn_block = 10;
  // Start north of the sensor so range/bearing stay well defined.
  s.initial_states = {KinematicState{0, 30, 15, 0, 0, 0}};
  s.region = {-50, 100, 0, 250};
  return s;
}

ScenarioSpec s1_test(std::uint64_t seed) {
  ScenarioSpec s = s1_train(seed);
  s.num_steps = 100;
  s.initial_states = {KinematicState{0, 50, 15, 0, 0, 0}};
  s.region = {-300, 100, 0, 1200};
  return s;
}

ScenarioSpec s2_train(std::uint64_t seed) {
  ScenarioSpec s = base_spec(seed);
  s.maneuver = Maneuver::kRandomAccel;
  s.num_steps = 1000;
  s.accel_levels = {0.1, 1.0, 10.0};
  s.initial_states = {KinematicState{0, 200, 15, 0, 0, 0}};
  s.region = {-1000, 1000, -1000, 1000};
  return s;
}

ScenarioSpec s2_test(std::uint64_t seed) {
  ScenarioSpec s = s2_train(seed);
  s.num_steps = 100;
  return s;
}

ScenarioSpec s3_test(std::uint64_t seed) {
  ScenarioSpec s = base_spec(seed);
  s.maneuver = Maneuver::kRandomTurns;
  s.num_steps = 100;
  s.turn_rate = deg2rad(15.0);
  s.initial_states = {KinematicState{0, 200, 15, 0, 0, 0}};
  s.region = {-1000, 1000, -1000, 1000};
  return s;
}

}  // namespace gptrack::kin
