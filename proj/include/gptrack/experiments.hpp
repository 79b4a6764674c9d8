#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gptrack/gpr.hpp"
#include "gptrack/io.hpp"
#include "gptrack/metrics.hpp"
#include "gptrack/nsim.hpp"

namespace gptrack::experiments {

/// One filter's Monte-Carlo batch outcome.
struct FilterSummary {
  std::string name;
  double pooled_rmse = 0.0;            // over all runs and scans
  std::vector<double> per_run_rmse;
  // Multi-target batches only (empty otherwise):
  double mean_gospa = 0.0;             // mean over runs of per-run mean GOSPA
  std::vector<double> per_run_gospa;
  std::vector<double> gospa_trace;     // per-scan mean over runs
};

struct ExperimentResult {
  std::string name;
  gpr::Hyperparameters hp{};           // motion-model hyperparameters used
  int runs = 0;
  int num_particles = 0;
  std::vector<FilterSummary> filters;

  const FilterSummary& filter(const std::string& filter_name) const;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int runs = 50;
  int num_particles = 200;  // per target
  bool quiet = true;        // suppress per-run progress on stderr
};

/// Worker-thread cap: GPTRACK_THREADS when set (>= 1), else hardware
/// concurrency. Results never depend on the thread count.
int max_threads();

/// Runs body(0..n-1), striped across at most max_threads() workers. The
/// first exception thrown by any body is rethrown after all workers join.
void parallel_for(int n, const std::function<void(int)>& body);

/// Motion models learned from the canned training trajectories (shared
/// hyperparameters picked on the default grid, process noise 1).
nsim::NsimModel train_s1_model(std::uint64_t seed);
nsim::NsimModel train_s2_model(std::uint64_t seed);

/// Alternating-turn scenario: learned-model filter vs oracle PF vs two-model
/// IMM at the matched turn rate.
ExperimentResult run_s1(const ExperimentConfig& cfg);

/// Random-acceleration scenario: learned-model filter vs oracle PF vs
/// nine-model IMM over the acceleration levels.
ExperimentResult run_s2(const ExperimentConfig& cfg);

/// Model transfer: the random-acceleration-trained model tracking the
/// alternating-turn and random-turn scenarios (vs oracle and IMM-9).
std::vector<ExperimentResult> run_cross(const ExperimentConfig& cfg);

/// Turn-rate sweep: the alternating-turn-trained model tracking its scenario
/// at turn rates 5/10/15/20/30 deg/s (vs oracle at each rate).
std::vector<ExperimentResult> run_turnrate(const ExperimentConfig& cfg);

/// Three-target batch with random-acceleration motion: belief-propagation
/// association with the learned model vs oracle PF and IMM-9 given the true
/// association. Summaries carry GOSPA as the headline metric.
ExperimentResult run_mtt(const ExperimentConfig& cfg);

/// The three-target scenario used by run_mtt (seed left for the caller).
kin::ScenarioSpec mtt_scenario();

io::json result_to_json(const ExperimentResult& r);

}  // namespace gptrack::experiments
