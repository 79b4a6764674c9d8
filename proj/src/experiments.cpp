#include "gptrack/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "gptrack/baselines.hpp"
#include "gptrack/mtt.hpp"
#include "gptrack/pf.hpp"

namespace gptrack::experiments {

namespace {

// Sub-stream tags hung off each run's seed (and the batch seed for
// training). Values avoid the engine-level stream ids in gptrack::stream.
constexpr std::uint64_t kScenarioTag = 10;
constexpr std::uint64_t kGpTag = 11;
constexpr std::uint64_t kOracleTag = 12;
constexpr std::uint64_t kImm2Tag = 13;
constexpr std::uint64_t kImm9Tag = 14;
constexpr std::uint64_t kTrainTag = 20;

std::vector<kin::Measurement> dense_scans(
    const std::vector<kin::MeasurementSet>& scans) {
  std::vector<kin::Measurement> out;
  out.reserve(scans.size());
  for (const auto& s : scans) {
    if (s.meas.size() != 1)
      throw DataError(
          "single-target batch expects exactly one measurement per scan");
    out.push_back(s.meas[0]);
  }
  return out;
}

double sumsq_position_error(const std::vector<kin::KinematicState>& truth,
                            const std::vector<pf::Particle>& est) {
  if (truth.size() != est.size())
    throw DataError("estimate/truth lengths differ");
  double s = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const double dx = est[t].xi - truth[t].xi;
    const double de = est[t].eta - truth[t].eta;
    s += dx * dx + de * de;
  }
  return s;
}

baselines::BaselineConfig base_cfg(const kin::ScenarioSpec& spec, int M,
                                   std::uint64_t seed) {
  baselines::BaselineConfig bc;
  bc.num_particles = M;
  bc.sigma_r = spec.sigma_r;
  bc.sigma_b = spec.sigma_b;
  bc.dt = spec.dt;
  bc.seed = seed;
  return bc;
}

/// Shared Monte-Carlo loop for the single-target batches: per run, generate
/// a scenario instance and push it through each requested filter.
ExperimentResult run_stt_batch(
    const std::string& name, const nsim::NsimModel& model,
    const std::function<kin::ScenarioSpec(std::uint64_t)>& make_spec,
    const std::vector<std::string>& filters, const ExperimentConfig& cfg) {
  if (cfg.runs <= 0) throw ConfigError("experiment: runs must be > 0");
  if (cfg.num_particles <= 0)
    throw ConfigError("experiment: num_particles must be > 0");
  const int R = cfg.runs;
  const int F = static_cast<int>(filters.size());
  std::vector<std::vector<double>> sumsq(F, std::vector<double>(R, 0.0));
  std::vector<std::vector<std::size_t>> counts(
      F, std::vector<std::size_t>(R, 0));

  parallel_for(R, [&](int r) {
    const std::uint64_t run_seed =
        derive_seed(cfg.seed, {stream::kRun, static_cast<std::uint64_t>(r)});
    kin::ScenarioSpec spec = make_spec(derive_seed(run_seed, {kScenarioTag}));
    const auto truth = kin::generate_trajectory(spec);
    const auto meas = dense_scans(kin::generate_measurements({truth}, spec));

    for (int f = 0; f < F; ++f) {
      std::vector<pf::Particle> est;
      if (filters[f] == "gp") {
        pf::FilterConfig fc;
        fc.num_particles = cfg.num_particles;
        fc.sigma_r = spec.sigma_r;
        fc.sigma_b = spec.sigma_b;
        fc.seed = derive_seed(run_seed, {kGpTag});
        est = pf::track_stt(model, meas, fc).estimates;
      } else if (filters[f] == "oracle") {
        const auto bc =
            base_cfg(spec, cfg.num_particles, derive_seed(run_seed, {kOracleTag}));
        est = baselines::track_oracle_pf(truth, meas, bc).estimates;
      } else if (filters[f] == "imm2") {
        const auto bc =
            base_cfg(spec, cfg.num_particles, derive_seed(run_seed, {kImm2Tag}));
        est = baselines::track_imm_pf(baselines::imm2_turning(spec.turn_rate),
                                      truth[0], meas, bc)
                  .track.estimates;
      } else if (filters[f] == "imm9") {
        const auto bc =
            base_cfg(spec, cfg.num_particles, derive_seed(run_seed, {kImm9Tag}));
        est = baselines::track_imm_pf(baselines::imm9_accel(spec.accel_levels),
                                      truth[0], meas, bc)
                  .track.estimates;
      } else {
        throw ConfigError("experiment: unknown filter '" + filters[f] + "'");
      }
      sumsq[f][r] = sumsq_position_error(truth, est);
      counts[f][r] = truth.size();
    }
    if (!cfg.quiet)
      std::fprintf(stderr, "[%s] run %d/%d\n", name.c_str(), r + 1, R);
  });

  ExperimentResult res;
  res.name = name;
  res.hp = model.gp_xi.hp;
  res.runs = R;
  res.num_particles = cfg.num_particles;
  for (int f = 0; f < F; ++f) {
    FilterSummary fs;
    fs.name = filters[f];
    double total = 0.0;
    std::size_t n = 0;
    for (int r = 0; r < R; ++r) {
      fs.per_run_rmse.push_back(
          std::sqrt(sumsq[f][r] / static_cast<double>(counts[f][r])));
      total += sumsq[f][r];
      n += counts[f][r];
    }
    fs.pooled_rmse = std::sqrt(total / static_cast<double>(n));
    res.filters.push_back(std::move(fs));
  }
  return res;
}

}  // namespace

const FilterSummary& ExperimentResult::filter(
    const std::string& filter_name) const {
  for (const auto& f : filters)
    if (f.name == filter_name) return f;
  throw DataError("experiment '" + name + "' has no filter '" + filter_name +
                  "'");
}

int max_threads() {
  if (const char* env = std::getenv("GPTRACK_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc >= 1 ? static_cast<int>(hc) : 1;
}

void parallel_for(int n, const std::function<void(int)>& body) {
  if (n <= 0) return;
  const int workers = std::min(max_threads(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

nsim::NsimModel train_s1_model(std::uint64_t seed) {
  const kin::ScenarioSpec spec = kin::s1_train(seed);
  const auto traj = kin::generate_trajectory(spec);
  return nsim::train(nsim::positions_of(traj),
                     nsim::TrainOptions::with_default_grid(1.0, spec.dt));
}

nsim::NsimModel train_s2_model(std::uint64_t seed) {
  const kin::ScenarioSpec spec = kin::s2_train(seed);
  const auto traj = kin::generate_trajectory(spec);
  return nsim::train(nsim::positions_of(traj),
                     nsim::TrainOptions::with_default_grid(1.0, spec.dt));
}

ExperimentResult run_s1(const ExperimentConfig& cfg) {
  const nsim::NsimModel model =
      train_s1_model(derive_seed(cfg.seed, {kTrainTag, 1}));
  return run_stt_batch(
      "s1", model, [](std::uint64_t s) { return kin::s1_test(s); },
      {"gp", "oracle", "imm2"}, cfg);
}

ExperimentResult run_s2(const ExperimentConfig& cfg) {
  const nsim::NsimModel model =
      train_s2_model(derive_seed(cfg.seed, {kTrainTag, 2}));
  return run_stt_batch(
      "s2", model, [](std::uint64_t s) { return kin::s2_test(s); },
      {"gp", "oracle", "imm9"}, cfg);
}

std::vector<ExperimentResult> run_cross(const ExperimentConfig& cfg) {
  const nsim::NsimModel model =
      train_s2_model(derive_seed(cfg.seed, {kTrainTag, 2}));
  std::vector<ExperimentResult> out;
  out.push_back(run_stt_batch(
      "cross_s1", model, [](std::uint64_t s) { return kin::s1_test(s); },
      {"gp", "oracle", "imm9"}, cfg));
  out.push_back(run_stt_batch(
      "cross_s3", model, [](std::uint64_t s) { return kin::s3_test(s); },
      {"gp", "oracle", "imm9"}, cfg));
  return out;
}

std::vector<ExperimentResult> run_turnrate(const ExperimentConfig& cfg) {
  const nsim::NsimModel model =
      train_s1_model(derive_seed(cfg.seed, {kTrainTag, 1}));
  std::vector<ExperimentResult> out;
  for (const int rate : {5, 10, 15, 20, 30}) {
    out.push_back(run_stt_batch(
        "turnrate_" + std::to_string(rate), model,
        [rate](std::uint64_t s) {
          kin::ScenarioSpec spec = kin::s1_test(s);
          spec.turn_rate = deg2rad(static_cast<double>(rate));
          return spec;
        },
        {"gp", "oracle"}, cfg));
  }
  return out;
}

kin::ScenarioSpec mtt_scenario() {
  kin::ScenarioSpec s;
  s.maneuver = kin::Maneuver::kRandomAccel;
  s.num_steps = 50;
  s.accel_levels = {0.1, 1.0, 10.0};
  s.initial_states = {
      kin::KinematicState{0.0, 250.0, 15.0, 0.0, 0.0, 0.0},
      kin::KinematicState{200.0, -50.0, 15.0, 2.0, 0.0, 0.0},
      kin::KinematicState{-180.0, -120.0, 15.0, -2.5, 0.0, 0.0},
  };
  s.sigma_r = 5.0;
  s.sigma_b = deg2rad(0.5);
  s.p_d = 0.95;
  s.lambda_fa = 2.0;
  s.region = kin::Region{-1000.0, 1000.0, -1000.0, 1000.0};
  return s;
}

ExperimentResult run_mtt(const ExperimentConfig& cfg) {
  if (cfg.runs <= 0) throw ConfigError("experiment: runs must be > 0");
  const nsim::NsimModel model =
      train_s2_model(derive_seed(cfg.seed, {kTrainTag, 2}));
  const kin::ScenarioSpec proto = mtt_scenario();
  const int K = static_cast<int>(proto.initial_states.size());
  const int T = proto.num_steps;
  const int R = cfg.runs;
  const std::vector<std::string> filters = {"gp_bp", "oracle", "imm9"};
  const int F = static_cast<int>(filters.size());

  std::vector<std::vector<double>> gospa_run(F, std::vector<double>(R, 0.0));
  std::vector<std::vector<double>> sumsq(F, std::vector<double>(R, 0.0));
  std::vector<std::vector<std::vector<double>>> trace(
      F, std::vector<std::vector<double>>(R, std::vector<double>(T, 0.0)));

  parallel_for(R, [&](int r) {
    const std::uint64_t run_seed =
        derive_seed(cfg.seed, {stream::kRun, static_cast<std::uint64_t>(r)});
    kin::ScenarioSpec spec = proto;
    spec.seed = derive_seed(run_seed, {kScenarioTag});
    std::vector<std::vector<kin::KinematicState>> truths(K);
    for (int k = 0; k < K; ++k)
      truths[k] = kin::generate_trajectory(spec, k);
    const auto scans = kin::generate_measurements(truths, spec);

    // Per-target measurement sequences via the true origin labels, for the
    // baselines that are given the association.
    std::vector<std::vector<std::optional<kin::Measurement>>> assoc_meas(
        K, std::vector<std::optional<kin::Measurement>>(T));
    for (int t = 0; t < T; ++t)
      for (std::size_t j = 0; j < scans[t].meas.size(); ++j) {
        const int origin = scans[t].origin[j];
        if (origin >= 0 && origin < K)
          assoc_meas[origin][t] = scans[t].meas[j];
      }

    // estimates[f][t][k]
    std::vector<std::vector<std::vector<pf::Particle>>> est(F);

    mtt::MttConfig mc;
    mc.num_particles = cfg.num_particles;
    mc.sigma_r = spec.sigma_r;
    mc.sigma_b = spec.sigma_b;
    mc.p_d = spec.p_d;
    mc.lambda_fa = spec.lambda_fa;
    mc.seed = derive_seed(run_seed, {kGpTag});
    std::vector<pf::Particle> centers;
    for (int k = 0; k < K; ++k) {
      const kin::KinematicState& s0 = truths[k][0];
      centers.push_back({s0.xi, s0.eta, s0.v * std::cos(s0.phi) * spec.dt,
                         s0.v * std::sin(s0.phi) * spec.dt});
    }
    est[0] = mtt::track_mtt(model, scans, centers, mc).estimates;

    for (int fi = 1; fi < F; ++fi) {
      est[fi].assign(T, std::vector<pf::Particle>(K));
      for (int k = 0; k < K; ++k) {
        auto bc = base_cfg(
            spec, cfg.num_particles,
            derive_seed(run_seed, {fi == 1 ? kOracleTag : kImm9Tag}));
        bc.target_key = static_cast<std::uint64_t>(k);
        std::vector<pf::Particle> track;
        if (fi == 1) {
          track = baselines::track_oracle_pf(truths[k], assoc_meas[k], bc)
                      .estimates;
        } else {
          track = baselines::track_imm_pf(
                      baselines::imm9_accel(spec.accel_levels), truths[k][0],
                      assoc_meas[k], bc)
                      .track.estimates;
        }
        for (int t = 0; t < T; ++t) est[fi][t][k] = track[t];
      }
    }

    for (int f = 0; f < F; ++f) {
      for (int t = 0; t < T; ++t) {
        std::vector<Eigen::Vector2d> X, Xh;
        for (int k = 0; k < K; ++k) {
          X.emplace_back(truths[k][t].xi, truths[k][t].eta);
          Xh.emplace_back(est[f][t][k].xi, est[f][t][k].eta);
          const double dx = est[f][t][k].xi - truths[k][t].xi;
          const double de = est[f][t][k].eta - truths[k][t].eta;
          sumsq[f][r] += dx * dx + de * de;
        }
        const double g = metrics::gospa(X, Xh, metrics::GospaParams{});
        trace[f][r][t] = g;
        gospa_run[f][r] += g;
      }
    }
    if (!cfg.quiet) std::fprintf(stderr, "[mtt] run %d/%d\n", r + 1, R);
  });

  ExperimentResult res;
  res.name = "mtt";
  res.hp = model.gp_xi.hp;
  res.runs = R;
  res.num_particles = cfg.num_particles;
  for (int f = 0; f < F; ++f) {
    FilterSummary fs;
    fs.name = filters[f];
    double total_sq = 0.0;
    double total_g = 0.0;
    for (int r = 0; r < R; ++r) {
      fs.per_run_rmse.push_back(
          std::sqrt(sumsq[f][r] / static_cast<double>(K * T)));
      fs.per_run_gospa.push_back(gospa_run[f][r] / static_cast<double>(T));
      total_sq += sumsq[f][r];
      total_g += gospa_run[f][r];
    }
    fs.pooled_rmse = std::sqrt(total_sq / static_cast<double>(K * T * R));
    fs.mean_gospa = total_g / static_cast<double>(T * R);
    fs.gospa_trace.assign(T, 0.0);
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (int r = 0; r < R; ++r) s += trace[f][r][t];
      fs.gospa_trace[t] = s / static_cast<double>(R);
    }
    res.filters.push_back(std::move(fs));
  }
  return res;
}

io::json result_to_json(const ExperimentResult& r) {
  io::json j;
  j["name"] = r.name;
  j["runs"] = r.runs;
  j["num_particles"] = r.num_particles;
  j["hyperparameters"] = {{"length_scale", r.hp.length_scale},
                          {"signal_var", r.hp.signal_var},
                          {"noise_var", r.hp.noise_var}};
  j["filters"] = io::json::array();
  for (const auto& f : r.filters) {
    io::json jf;
    jf["name"] = f.name;
    jf["pooled_rmse"] = f.pooled_rmse;
    jf["per_run_rmse"] = f.per_run_rmse;
    if (!f.per_run_gospa.empty()) {
      jf["mean_gospa"] = f.mean_gospa;
      jf["per_run_gospa"] = f.per_run_gospa;
      jf["gospa_trace"] = f.gospa_trace;
    }
    j["filters"].push_back(jf);
  }
  return j;
}

}  // namespace gptrack::experiments
