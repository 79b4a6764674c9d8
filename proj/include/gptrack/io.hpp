#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gptrack/kinematics.hpp"
#include "gptrack/nsim.hpp"
#include "gptrack/pf.hpp"

namespace gptrack::io {

using json = nlohmann::ordered_json;

// --- trajectory CSV: t, k, xi, eta, v, phi, a_t, a_n -----------------------

void write_trajectories_csv(
    const std::string& path,
    const std::vector<std::vector<kin::KinematicState>>& trajectories);

/// Returns trajectories[k][t]; every target must cover the same steps.
std::vector<std::vector<kin::KinematicState>> read_trajectories_csv(
    const std::string& path);

// --- measurement CSV: t, kappa, r, bearing, origin --------------------------
// kappa is the within-scan index; origin is the generating target or -1 for
// clutter. Scans with no measurements produce no rows, so the scan count is
// inferred from the largest t present.

void write_measurements_csv(const std::string& path,
                            const std::vector<kin::MeasurementSet>& scans);

std::vector<kin::MeasurementSet> read_measurements_csv(const std::string& path);

// --- estimate CSV: t, k, xi_hat, eta_hat, dxi_hat, deta_hat ------------------

void write_estimates_csv(
    const std::string& path,
    const std::vector<std::vector<pf::Particle>>& estimates_by_step);

std::vector<std::vector<pf::Particle>> read_estimates_csv(
    const std::string& path);

// --- association dump CSV: t, k, kappa, p_a ---------------------------------
// kappa = -1 denotes the missed-detection hypothesis.

void write_assoc_csv(const std::string& path,
                     const std::vector<Eigen::MatrixXd>& marginals_by_step);

// --- scenario config JSON ----------------------------------------------------
// {"scenario": "s1_train|s1_test|s2_train|s2_test|s3_test|custom",
//  "seed": <u64 required>, ...field overrides...}

kin::ScenarioSpec scenario_from_json(const json& j);
json scenario_to_json(const kin::ScenarioSpec& spec, const std::string& name);
kin::ScenarioSpec load_scenario(const std::string& path);

// --- motion-model JSON -------------------------------------------------------
// Hyperparameters plus raw training data; the factorization is rebuilt on
// load rather than serialized.

void save_model(const std::string& path, const nsim::NsimModel& model);
nsim::NsimModel load_model(const std::string& path);

// --- run manifest --------------------------------------------------------------

/// Writes <dir>/manifest.json recording the command, config snapshot, seed,
/// inputs/outputs, toolkit version, and wall-clock duration.
void write_manifest(const std::string& dir, const json& manifest);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

/// Format a double with full round-trip precision.
std::string format_double(double v);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace gptrack::io
