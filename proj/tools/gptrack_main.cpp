// gptrack: simulate -> train -> track -> evaluate pipeline driver.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numerical failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gptrack/baselines.hpp"
#include "gptrack/experiments.hpp"
#include "gptrack/io.hpp"
#include "gptrack/metrics.hpp"
#include "gptrack/mtt.hpp"
#include "gptrack/nsim.hpp"
#include "gptrack/pf.hpp"

namespace fs = std::filesystem;
using namespace gptrack;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

io::json make_manifest(const std::string& command, const io::json& config,
                       const io::json& seeds,
                       const std::vector<std::string>& inputs,
                       const std::vector<std::string>& outputs,
                       double duration_s) {
  io::json m;
  m["command"] = command;
  m["config"] = config;
  m["seeds"] = seeds;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["version"] = io::kToolVersion;
  m["duration_seconds"] = duration_s;
  return m;
}

void reject_unknown_keys(const io::json& j,
                         const std::vector<std::string>& known,
                         const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok) throw ConfigError(what + ": unknown key '" + key + "'");
  }
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const std::string& config_path,
                 std::optional<std::uint64_t> seed_flag,
                 const std::string& out_dir, bool quiet) {
  const auto t0 = Clock::now();
  io::json cfg = io::read_json_file(config_path);
  if (!cfg.is_object()) throw ConfigError("scenario config must be an object");
  if (seed_flag) cfg["seed"] = *seed_flag;
  const std::string name = cfg.value("scenario", std::string("custom"));

  struct Leg {
    std::string suffix;
    kin::ScenarioSpec spec;
  };
  std::vector<Leg> legs;
  io::json seeds;
  if (name == "s1" || name == "s2" || name == "s3") {
    // Paired aliases: emit the training and evaluation legs together.
    if (!cfg.contains("seed") || !cfg["seed"].is_number_unsigned())
      throw ConfigError("scenario config requires an unsigned integer 'seed'");
    const std::uint64_t base = cfg["seed"].get<std::uint64_t>();
    auto leg_spec = [&](const std::string& preset, std::uint64_t s) {
      io::json leg = cfg;
      leg["scenario"] = preset;
      leg["seed"] = s;
      return io::scenario_from_json(leg);
    };
    if (name != "s3") {
      const std::uint64_t s_train = derive_seed(base, {101});
      legs.push_back({"_train", leg_spec(name + "_train", s_train)});
      seeds["train"] = s_train;
    }
    const std::uint64_t s_test = derive_seed(base, {102});
    legs.push_back({"_test", leg_spec(name + "_test", s_test)});
    seeds["test"] = s_test;
  } else {
    legs.push_back({"", io::scenario_from_json(cfg)});
    seeds["scenario"] = legs[0].spec.seed;
  }

  // Generate everything before writing anything.
  struct LegData {
    std::vector<std::vector<kin::KinematicState>> trajs;
    std::vector<kin::MeasurementSet> scans;
  };
  std::vector<LegData> data;
  for (const auto& leg : legs) {
    LegData d;
    const int K = static_cast<int>(leg.spec.initial_states.size());
    for (int k = 0; k < K; ++k)
      d.trajs.push_back(kin::generate_trajectory(leg.spec, k));
    d.scans = kin::generate_measurements(d.trajs, leg.spec);
    data.push_back(std::move(d));
  }

  fs::create_directories(out_dir);
  std::vector<std::string> outputs;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    const std::string traj_path =
        (fs::path(out_dir) / ("trajectory" + legs[i].suffix + ".csv")).string();
    const std::string meas_path =
        (fs::path(out_dir) / ("measurements" + legs[i].suffix + ".csv"))
            .string();
    io::write_trajectories_csv(traj_path, data[i].trajs);
    io::write_measurements_csv(meas_path, data[i].scans);
    outputs.push_back(traj_path);
    outputs.push_back(meas_path);
    if (!quiet)
      std::cout << "wrote " << traj_path << " ("
                << data[i].trajs.front().size() << " steps, "
                << data[i].trajs.size() << " target(s))\n";
  }
  io::write_manifest(out_dir,
                     make_manifest("simulate", cfg, seeds, {config_path},
                                   outputs, seconds_since(t0)));
  return 0;
}

// --- train ------------------------------------------------------------------

nsim::TrainOptions train_options_from_json(const io::json& j) {
  reject_unknown_keys(j,
                      {"noise_var", "dt", "shared_hyperparameters",
                       "length_scale", "signal_var", "grid"},
                      "train config");
  nsim::TrainOptions opts;
  const double noise_var = j.value("noise_var", 1.0);
  opts.dt = j.value("dt", 1.0);
  opts.shared_hyperparameters = j.value("shared_hyperparameters", true);
  if (j.contains("length_scale") != j.contains("signal_var"))
    throw ConfigError(
        "train config: fixed hyperparameters need both length_scale and "
        "signal_var");
  if (j.contains("length_scale")) {
    opts.use_grid = false;
    opts.fixed_hp.length_scale = j["length_scale"].get<double>();
    opts.fixed_hp.signal_var = j["signal_var"].get<double>();
    opts.fixed_hp.noise_var = noise_var;
    return opts;
  }
  opts.use_grid = true;
  opts.grid = gpr::default_grid(noise_var);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown_keys(g, {"length_scales", "signal_vars"},
                        "train config grid");
    if (g.contains("length_scales"))
      opts.grid.length_scales = g["length_scales"].get<std::vector<double>>();
    if (g.contains("signal_vars"))
      opts.grid.signal_vars = g["signal_vars"].get<std::vector<double>>();
  }
  return opts;
}

int cmd_train(const std::string& traj_path, const std::string& config_path,
              const std::string& out_dir, bool quiet) {
  const auto t0 = Clock::now();
  io::json cfg = io::json::object();
  if (!config_path.empty()) cfg = io::read_json_file(config_path);
  const nsim::TrainOptions opts = train_options_from_json(cfg);

  const auto trajs = io::read_trajectories_csv(traj_path);
  std::vector<std::vector<Eigen::Vector2d>> positions;
  for (const auto& traj : trajs) positions.push_back(nsim::positions_of(traj));
  const nsim::NsimModel model = nsim::train(positions, opts);

  fs::create_directories(out_dir);
  const std::string model_path = (fs::path(out_dir) / "model.json").string();
  io::save_model(model_path, model);
  if (!quiet)
    std::cout << "trained on " << model.gp_xi.size()
              << " delta pairs; length_scale=" << model.gp_xi.hp.length_scale
              << " signal_var=" << model.gp_xi.hp.signal_var
              << " noise_var=" << model.gp_xi.hp.noise_var << "\n";

  std::vector<std::string> inputs = {traj_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  io::write_manifest(out_dir,
                     make_manifest("train", cfg, io::json::object(), inputs,
                                   {model_path}, seconds_since(t0)));
  return 0;
}

// --- track ------------------------------------------------------------------

struct TrackSettings {
  int num_particles = 0;  // 0: mode default (200 stt / 500 mtt)
  double q_xi = 1.0, q_eta = 1.0;
  double sigma_r = 5.0, sigma_b = deg2rad(0.5);
  double p_d = 1.0, lambda_fa = 0.0;
  std::string resample = "every";
  double ess_fraction = 0.5;
  double pos_spread = 0.0, vel_spread = 0.0;
  bool missed_detection_term = false;
  assoc::BpConfig bp;
};

TrackSettings track_settings_from_json(const io::json& j) {
  reject_unknown_keys(
      j,
      {"num_particles", "q_xi", "q_eta", "sigma_r", "sigma_b_deg", "p_d",
       "lambda_fa", "resample", "ess_fraction", "pos_spread", "vel_spread",
       "missed_detection_term", "bp"},
      "track config");
  TrackSettings s;
  s.num_particles = j.value("num_particles", 0);
  s.q_xi = j.value("q_xi", 1.0);
  s.q_eta = j.value("q_eta", 1.0);
  s.sigma_r = j.value("sigma_r", 5.0);
  if (j.contains("sigma_b_deg")) s.sigma_b = deg2rad(j["sigma_b_deg"].get<double>());
  s.p_d = j.value("p_d", 1.0);
  s.lambda_fa = j.value("lambda_fa", 0.0);
  s.resample = j.value("resample", std::string("every"));
  if (s.resample != "every" && s.resample != "ess")
    throw ConfigError("track config: resample must be 'every' or 'ess'");
  s.ess_fraction = j.value("ess_fraction", 0.5);
  s.pos_spread = j.value("pos_spread", 0.0);
  s.vel_spread = j.value("vel_spread", 0.0);
  s.missed_detection_term = j.value("missed_detection_term", false);
  if (j.contains("bp")) {
    const auto& b = j["bp"];
    reject_unknown_keys(b, {"max_iterations", "tolerance", "damping"},
                        "track config bp");
    s.bp.max_iter = b.value("max_iterations", s.bp.max_iter);
    s.bp.tol = b.value("tolerance", s.bp.tol);
    s.bp.damping = b.value("damping", s.bp.damping);
  }
  return s;
}

std::vector<kin::Measurement> single_per_scan(
    const std::vector<kin::MeasurementSet>& scans) {
  std::vector<kin::Measurement> out;
  for (const auto& s : scans) {
    if (s.meas.size() != 1)
      throw DataError(
          "single-target mode expects exactly one measurement per scan; scan "
          "t=" +
          std::to_string(s.t) + " has " + std::to_string(s.meas.size()));
    out.push_back(s.meas[0]);
  }
  return out;
}

int cmd_track(const std::string& meas_path, const std::string& model_path,
              const std::string& truth_path, const std::string& filter,
              const std::string& mode, const std::string& config_path,
              std::uint64_t seed, const std::string& out_dir, bool dump_assoc,
              bool quiet) {
  const auto t0 = Clock::now();
  io::json cfg = io::json::object();
  if (!config_path.empty()) cfg = io::read_json_file(config_path);
  const TrackSettings ts = track_settings_from_json(cfg);

  if (filter != "gp" && filter != "oracle" && filter != "imm2" &&
      filter != "imm9")
    throw ConfigError("track: filter must be gp|oracle|imm2|imm9");
  if (mode != "stt" && mode != "mtt")
    throw ConfigError("track: mode must be stt|mtt");
  if (filter == "gp" && model_path.empty())
    throw ConfigError("track: the gp filter needs --model");
  const bool needs_truth =
      filter == "oracle" || filter == "imm2" || filter == "imm9" ||
      mode == "mtt";
  if (needs_truth && truth_path.empty())
    throw ConfigError("track: --truth is required for " +
                      (mode == "mtt" ? std::string("mtt mode") : filter));
  if (dump_assoc && !(mode == "mtt" && filter == "gp"))
    throw ConfigError("track: --dump-assoc applies to gp/mtt only");

  const int M = ts.num_particles > 0 ? ts.num_particles
                                     : (mode == "mtt" ? 500 : 200);
  const auto scans = io::read_measurements_csv(meas_path);
  if (scans.empty()) throw DataError(meas_path + ": no scans");

  nsim::NsimModel model;
  if (!model_path.empty()) model = io::load_model(model_path);
  std::vector<std::vector<kin::KinematicState>> truth;
  if (!truth_path.empty()) {
    truth = io::read_trajectories_csv(truth_path);
    for (const auto& tr : truth)
      if (tr.size() != scans.size())
        throw DataError("track: truth and measurement scan counts differ");
  }

  std::vector<std::vector<pf::Particle>> estimates;  // [t][k]
  io::json diagnostics;
  std::vector<Eigen::MatrixXd> assoc_marginals;

  if (mode == "stt") {
    std::vector<pf::Particle> track;
    if (filter == "gp") {
      const auto meas = single_per_scan(scans);
      pf::FilterConfig fc;
      fc.num_particles = M;
      fc.q_xi = ts.q_xi;
      fc.q_eta = ts.q_eta;
      fc.sigma_r = ts.sigma_r;
      fc.sigma_b = ts.sigma_b;
      fc.resample_mode = ts.resample == "every" ? pf::ResampleMode::kEveryStep
                                                : pf::ResampleMode::kEssThreshold;
      fc.ess_fraction = ts.ess_fraction;
      fc.pos_spread = ts.pos_spread;
      fc.vel_spread = ts.vel_spread;
      fc.seed = seed;
      const pf::SttResult r = pf::track_stt(model, meas, fc);
      track = r.estimates;
      diagnostics["ess"] = r.ess;
      diagnostics["respread_steps"] = r.respread_steps;
    } else {
      if (truth.size() != 1)
        throw DataError("track: stt baselines expect single-target truth");
      const auto meas = single_per_scan(scans);
      baselines::BaselineConfig bc;
      bc.num_particles = M;
      bc.q_xi = ts.q_xi;
      bc.q_eta = ts.q_eta;
      bc.sigma_r = ts.sigma_r;
      bc.sigma_b = ts.sigma_b;
      bc.resample_mode = ts.resample == "every"
                             ? pf::ResampleMode::kEveryStep
                             : pf::ResampleMode::kEssThreshold;
      bc.ess_fraction = ts.ess_fraction;
      bc.pos_spread = ts.pos_spread;
      bc.seed = seed;
      if (filter == "oracle") {
        const pf::SttResult r = baselines::track_oracle_pf(truth[0], meas, bc);
        track = r.estimates;
        diagnostics["ess"] = r.ess;
        diagnostics["respread_steps"] = r.respread_steps;
      } else {
        const auto imm = filter == "imm2" ? baselines::imm2_turning()
                                          : baselines::imm9_accel();
        const baselines::ImmResult r =
            baselines::track_imm_pf(imm, truth[0][0], meas, bc);
        track = r.track.estimates;
        diagnostics["ess"] = r.track.ess;
        diagnostics["respread_steps"] = r.track.respread_steps;
        std::vector<std::vector<double>> probs;
        for (Eigen::Index t = 0; t < r.model_probs.rows(); ++t)
          probs.emplace_back(r.model_probs.row(t).begin(),
                             r.model_probs.row(t).end());
        diagnostics["model_probs"] = probs;
      }
    }
    estimates.resize(track.size());
    for (std::size_t t = 0; t < track.size(); ++t)
      estimates[t] = {track[t]};
  } else {
    // mtt
    const int K = static_cast<int>(truth.size());
    const int T = static_cast<int>(scans.size());
    if (K == 0) throw DataError("track: mtt mode needs at least one target");
    if (filter == "gp") {
      mtt::MttConfig mc;
      mc.num_particles = M;
      mc.q_xi = ts.q_xi;
      mc.q_eta = ts.q_eta;
      mc.sigma_r = ts.sigma_r;
      mc.sigma_b = ts.sigma_b;
      mc.p_d = ts.p_d;
      mc.lambda_fa = ts.lambda_fa;
      mc.bp = ts.bp;
      mc.resample_mode = ts.resample == "every"
                             ? pf::ResampleMode::kEveryStep
                             : pf::ResampleMode::kEssThreshold;
      mc.ess_fraction = ts.ess_fraction;
      mc.pos_spread = ts.pos_spread;
      mc.vel_spread = ts.vel_spread;
      mc.missed_detection_term = ts.missed_detection_term;
      mc.seed = seed;
      std::vector<pf::Particle> centers;
      for (int k = 0; k < K; ++k) {
        const kin::KinematicState& s0 = truth[k][0];
        centers.push_back({s0.xi, s0.eta, s0.v * std::cos(s0.phi) * model.dt,
                           s0.v * std::sin(s0.phi) * model.dt});
      }
      const mtt::MttResult r = mtt::track_mtt(model, scans, centers, mc);
      estimates = r.estimates;
      assoc_marginals = r.marginals;
      diagnostics["respread_events"] = r.respread_events;
      std::vector<int> bp_iters;
      std::vector<int> bp_conv;
      for (const auto& d : r.diagnostics) {
        bp_iters.push_back(d.bp_iterations);
        bp_conv.push_back(d.bp_converged ? 1 : 0);
      }
      diagnostics["bp_iterations"] = bp_iters;
      diagnostics["bp_converged"] = bp_conv;
    } else {
      if (filter == "imm2")
        throw ConfigError("track: imm2 is a single-target baseline");
      // True-association baselines: route measurements by origin label.
      std::vector<std::vector<std::optional<kin::Measurement>>> assoc_meas(
          K, std::vector<std::optional<kin::Measurement>>(T));
      for (int t = 0; t < T; ++t)
        for (std::size_t j = 0; j < scans[t].meas.size(); ++j) {
          const int origin = scans[t].origin[j];
          if (origin >= 0 && origin < K)
            assoc_meas[origin][t] = scans[t].meas[j];
        }
      estimates.assign(T, std::vector<pf::Particle>(K));
      for (int k = 0; k < K; ++k) {
        baselines::BaselineConfig bc;
        bc.num_particles = M;
        bc.q_xi = ts.q_xi;
        bc.q_eta = ts.q_eta;
        bc.sigma_r = ts.sigma_r;
        bc.sigma_b = ts.sigma_b;
        bc.resample_mode = ts.resample == "every"
                               ? pf::ResampleMode::kEveryStep
                               : pf::ResampleMode::kEssThreshold;
        bc.ess_fraction = ts.ess_fraction;
        bc.pos_spread = ts.pos_spread;
        bc.seed = seed;
        bc.target_key = static_cast<std::uint64_t>(k);
        std::vector<pf::Particle> track;
        if (filter == "oracle")
          track =
              baselines::track_oracle_pf(truth[k], assoc_meas[k], bc).estimates;
        else
          track = baselines::track_imm_pf(baselines::imm9_accel(), truth[k][0],
                                          assoc_meas[k], bc)
                      .track.estimates;
        for (int t = 0; t < T; ++t) estimates[t][k] = track[t];
      }
    }
  }

  fs::create_directories(out_dir);
  const std::string est_path = (fs::path(out_dir) / "estimates.csv").string();
  io::write_estimates_csv(est_path, estimates);
  std::vector<std::string> outputs = {est_path};
  const std::string diag_path =
      (fs::path(out_dir) / "diagnostics.json").string();
  diagnostics["filter"] = filter;
  diagnostics["mode"] = mode;
  diagnostics["num_particles"] = M;
  io::write_json_file(diag_path, diagnostics);
  outputs.push_back(diag_path);
  if (dump_assoc) {
    const std::string assoc_path = (fs::path(out_dir) / "assoc.csv").string();
    io::write_assoc_csv(assoc_path, assoc_marginals);
    outputs.push_back(assoc_path);
  }
  if (!quiet)
    std::cout << "tracked " << estimates.size() << " scans, "
              << (estimates.empty() ? 0 : estimates[0].size())
              << " target(s) -> " << est_path << "\n";

  std::vector<std::string> inputs = {meas_path};
  if (!model_path.empty()) inputs.push_back(model_path);
  if (!truth_path.empty()) inputs.push_back(truth_path);
  if (!config_path.empty()) inputs.push_back(config_path);
  io::json seeds;
  seeds["filter"] = seed;
  io::write_manifest(out_dir, make_manifest("track", cfg, seeds, inputs,
                                            outputs, seconds_since(t0)));
  return 0;
}

// --- evaluate ---------------------------------------------------------------

int cmd_evaluate(const std::string& truth_path, const std::string& est_path,
                 const std::string& metric, const std::string& config_path,
                 const std::string& out_dir, bool quiet) {
  const auto t0 = Clock::now();
  io::json cfg = io::json::object();
  if (!config_path.empty()) cfg = io::read_json_file(config_path);
  if (metric != "rmse" && metric != "gospa")
    throw ConfigError("evaluate: metric must be rmse|gospa");

  const auto truth = io::read_trajectories_csv(truth_path);
  const auto est = io::read_estimates_csv(est_path);
  const int T = static_cast<int>(est.size());
  const int K = static_cast<int>(truth.size());
  for (const auto& tr : truth)
    if (static_cast<int>(tr.size()) != T)
      throw DataError("evaluate: truth and estimate time indices differ");

  io::json report;
  report["metric"] = metric;
  report["num_steps"] = T;
  report["num_targets"] = K;
  std::vector<double> per_step(T, 0.0);

  if (metric == "rmse") {
    reject_unknown_keys(cfg, {}, "evaluate config");
    const int Ke = T > 0 ? static_cast<int>(est[0].size()) : 0;
    if (Ke != K)
      throw DataError("evaluate: rmse needs matching target counts");
    metrics::SquaredErrorAccumulator acc;
    for (int t = 0; t < T; ++t) {
      double step_sq = 0.0;
      for (int k = 0; k < K; ++k) {
        const double dx = est[t][k].xi - truth[k][t].xi;
        const double de = est[t][k].eta - truth[k][t].eta;
        step_sq += dx * dx + de * de;
        acc.add(dx * dx + de * de);
      }
      per_step[t] = std::sqrt(step_sq / K);
    }
    report["value"] = acc.rmse();
  } else {
    reject_unknown_keys(cfg, {"c", "alpha", "p"}, "evaluate config");
    metrics::GospaParams gp;
    gp.c = cfg.value("c", gp.c);
    gp.alpha = cfg.value("alpha", gp.alpha);
    gp.p = cfg.value("p", gp.p);
    report["params"] = {{"c", gp.c}, {"alpha", gp.alpha}, {"p", gp.p}};
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
      std::vector<Eigen::Vector2d> X, Xh;
      for (int k = 0; k < K; ++k)
        X.emplace_back(truth[k][t].xi, truth[k][t].eta);
      for (const auto& e : est[t]) Xh.emplace_back(e.xi, e.eta);
      per_step[t] = metrics::gospa(X, Xh, gp);
      total += per_step[t];
    }
    report["value"] = T > 0 ? total / T : 0.0;
  }
  report["per_step"] = per_step;

  if (!quiet || out_dir.empty()) std::cout << report.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const std::string report_path =
        (fs::path(out_dir) / "report.json").string();
    io::write_json_file(report_path, report);
    std::ostringstream csv;
    csv << "t," << metric << "\n";
    for (int t = 0; t < T; ++t)
      csv << t << ',' << io::format_double(per_step[t]) << "\n";
    const std::string per_step_path =
        (fs::path(out_dir) / "per_step.csv").string();
    {
      std::ofstream f(per_step_path, std::ios::binary | std::ios::trunc);
      f << csv.str();
    }
    std::vector<std::string> inputs = {truth_path, est_path};
    if (!config_path.empty()) inputs.push_back(config_path);
    io::write_manifest(
        out_dir, make_manifest("evaluate", cfg, io::json::object(), inputs,
                               {report_path, per_step_path},
                               seconds_since(t0)));
  }
  return 0;
}

// --- experiment -------------------------------------------------------------

std::string format_table(
    const std::vector<experiments::ExperimentResult>& results) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  for (const auto& r : results) {
    os << "[" << r.name << "] runs=" << r.runs
       << " particles=" << r.num_particles
       << " length_scale=" << r.hp.length_scale
       << " signal_var=" << r.hp.signal_var << "\n";
    bool has_gospa = false;
    for (const auto& f : r.filters)
      has_gospa = has_gospa || !f.per_run_gospa.empty();
    os << "  " << std::left << std::setw(10) << "filter" << std::right
       << std::setw(14) << "pooled_rmse";
    if (has_gospa) os << std::setw(14) << "mean_gospa";
    os << "\n";
    for (const auto& f : r.filters) {
      os << "  " << std::left << std::setw(10) << f.name << std::right
         << std::setw(14) << f.pooled_rmse;
      if (has_gospa) os << std::setw(14) << f.mean_gospa;
      os << "\n";
    }
  }
  return os.str();
}

int cmd_experiment(const std::string& name, std::uint64_t seed, int runs,
                   int particles, const std::string& out_dir, bool quiet) {
  const auto t0 = Clock::now();
  experiments::ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.quiet = quiet;

  std::vector<experiments::ExperimentResult> results;
  if (name == "s1") {
    cfg.runs = runs > 0 ? runs : 50;
    cfg.num_particles = particles > 0 ? particles : 200;
    results.push_back(experiments::run_s1(cfg));
  } else if (name == "s2") {
    cfg.runs = runs > 0 ? runs : 50;
    cfg.num_particles = particles > 0 ? particles : 200;
    results.push_back(experiments::run_s2(cfg));
  } else if (name == "robustness") {
    cfg.runs = runs > 0 ? runs : 50;
    cfg.num_particles = particles > 0 ? particles : 200;
    for (auto& r : experiments::run_cross(cfg)) results.push_back(std::move(r));
    for (auto& r : experiments::run_turnrate(cfg))
      results.push_back(std::move(r));
  } else if (name == "mtt") {
    cfg.runs = runs > 0 ? runs : 25;
    cfg.num_particles = particles > 0 ? particles : 500;
    results.push_back(experiments::run_mtt(cfg));
  } else {
    throw ConfigError("experiment: name must be s1|s2|robustness|mtt");
  }

  fs::create_directories(out_dir);
  io::json summary = io::json::array();
  for (const auto& r : results)
    summary.push_back(experiments::result_to_json(r));
  const std::string summary_path =
      (fs::path(out_dir) / "summary.json").string();
  io::write_json_file(summary_path, summary);
  std::vector<std::string> outputs = {summary_path};

  const std::string table = format_table(results);
  const std::string table_path = (fs::path(out_dir) / "table.txt").string();
  {
    std::ofstream f(table_path, std::ios::binary | std::ios::trunc);
    f << table;
  }
  outputs.push_back(table_path);
  if (!quiet) std::cout << table;

  // Per-scan metric traces for the multi-target batch.
  for (const auto& r : results)
    for (const auto& f : r.filters) {
      if (f.gospa_trace.empty()) continue;
      const std::string trace_path =
          (fs::path(out_dir) / ("gospa_trace_" + f.name + ".csv")).string();
      std::ostringstream csv;
      csv << "t,gospa\n";
      for (std::size_t t = 0; t < f.gospa_trace.size(); ++t)
        csv << t << ',' << io::format_double(f.gospa_trace[t]) << "\n";
      std::ofstream out(trace_path, std::ios::binary | std::ios::trunc);
      out << csv.str();
      outputs.push_back(trace_path);
    }

  io::json config_snapshot;
  config_snapshot["name"] = name;
  config_snapshot["runs"] = cfg.runs;
  config_snapshot["num_particles"] = cfg.num_particles;
  io::json seeds;
  seeds["experiment"] = seed;
  io::write_manifest(out_dir, make_manifest("experiment", config_snapshot,
                                            seeds, {}, outputs,
                                            seconds_since(t0)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target tracking with a learned shift-invariant motion model"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand(
      "simulate", "Generate trajectories and measurements from a scenario");
  std::string sim_config, sim_out = "out";
  std::optional<std::uint64_t> sim_seed;
  bool sim_quiet = false;
  sim->add_option("--config", sim_config, "Scenario JSON")->required();
  sim->add_option("--seed", sim_seed, "Override the scenario seed");
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_flag("--quiet", sim_quiet, "Suppress progress output");

  // train
  auto* train = app.add_subcommand(
      "train", "Learn a motion model from a trajectory file");
  std::string train_traj, train_config, train_out = "out";
  bool train_quiet = false;
  train->add_option("trajectory", train_traj, "Trajectory CSV")->required();
  train->add_option("--config", train_config, "Training options JSON");
  train->add_option("--out", train_out, "Output directory");
  train->add_flag("--quiet", train_quiet, "Suppress progress output");

  // track
  auto* track = app.add_subcommand("track", "Run a tracking filter");
  std::string track_meas, track_model, track_truth, track_config;
  std::string track_filter = "gp", track_mode = "stt", track_out = "out";
  std::uint64_t track_seed = 1;
  bool track_dump_assoc = false, track_quiet = false;
  track->add_option("measurements", track_meas, "Measurement CSV")->required();
  track->add_option("--model", track_model, "Learned model JSON");
  track->add_option("--truth", track_truth,
                    "Truth trajectory CSV (baselines, mtt init)");
  track->add_option("--filter", track_filter, "gp|oracle|imm2|imm9");
  track->add_option("--mode", track_mode, "stt|mtt");
  track->add_option("--config", track_config, "Filter settings JSON");
  track->add_option("--seed", track_seed, "Filter RNG seed");
  track->add_option("--out", track_out, "Output directory");
  track->add_flag("--dump-assoc", track_dump_assoc,
                  "Write association marginals CSV (gp/mtt)");
  track->add_flag("--quiet", track_quiet, "Suppress progress output");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score estimates against truth");
  std::string eval_truth, eval_est, eval_metric = "rmse", eval_config,
              eval_out;
  bool eval_quiet = false;
  eval->add_option("truth", eval_truth, "Truth trajectory CSV")->required();
  eval->add_option("estimates", eval_est, "Estimates CSV")->required();
  eval->add_option("--metric", eval_metric, "rmse|gospa");
  eval->add_option("--config", eval_config, "Metric parameters JSON");
  eval->add_option("--out", eval_out, "Output directory (report + per-step)");
  eval->add_flag("--quiet", eval_quiet, "Print nothing on success");

  // experiment
  auto* expr = app.add_subcommand(
      "experiment", "Run a full Monte-Carlo comparison batch");
  std::string expr_name, expr_out = "out";
  std::uint64_t expr_seed = 1;
  int expr_runs = 0, expr_particles = 0;
  bool expr_quiet = false;
  expr->add_option("name", expr_name, "s1|s2|robustness|mtt")->required();
  expr->add_option("--seed", expr_seed, "Batch seed");
  expr->add_option("--runs", expr_runs, "Monte-Carlo runs (0 = default)");
  expr->add_option("--particles", expr_particles,
                   "Particles per target (0 = default)");
  expr->add_option("--out", expr_out, "Output directory");
  expr->add_flag("--quiet", expr_quiet, "Suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_config, sim_seed, sim_out, sim_quiet);
    if (train->parsed())
      return cmd_train(train_traj, train_config, train_out, train_quiet);
    if (track->parsed())
      return cmd_track(track_meas, track_model, track_truth, track_filter,
                       track_mode, track_config, track_seed, track_out,
                       track_dump_assoc, track_quiet);
    if (eval->parsed())
      return cmd_evaluate(eval_truth, eval_est, eval_metric, eval_config,
                          eval_out, eval_quiet);
    if (expr->parsed())
      return cmd_experiment(expr_name, expr_seed, expr_runs, expr_particles,
                            expr_out, expr_quiet);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
