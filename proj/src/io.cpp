#include "gptrack/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace gptrack::io {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  if (!f) throw DataError("write failed for " + path);
}

double parse_double(const std::string& field, const std::string& path,
                    std::size_t line) {
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e)
    throw DataError(path + ":" + std::to_string(line) +
                    ": bad numeric field '" + field + "'");
  return v;
}

long long parse_int(const std::string& field, const std::string& path,
                    std::size_t line) {
  long long v = 0;
  const char* b = field.data();
  const char* e = b + field.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e)
    throw DataError(path + ":" + std::to_string(line) +
                    ": bad integer field '" + field + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

struct CsvReader {
  std::string path;
  std::vector<std::vector<std::string>> rows;  // data rows only
  std::size_t first_data_line = 2;

  CsvReader(const std::string& p, const std::string& expected_header)
      : path(p) {
    std::istringstream in(read_text(p));
    std::string line;
    if (!std::getline(in, line))
      throw DataError(p + ": empty file, expected header " + expected_header);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
      throw DataError(p + ":1: expected header '" + expected_header +
                      "', got '" + line + "'");
    std::size_t n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty() || line == "\r") continue;
      rows.push_back(split_csv_line(line));
      if (rows.back().size() != rows.front().size() ||
          rows.back().size() !=
              static_cast<std::size_t>(
                  std::count(expected_header.begin(), expected_header.end(),
                             ',') +
                  1))
        throw DataError(p + ":" + std::to_string(n) + ": wrong column count");
      line_of.push_back(n);
    }
  }

  std::vector<std::size_t> line_of;
};

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trajectories_csv(
    const std::string& path,
    const std::vector<std::vector<kin::KinematicState>>& trajectories) {
  if (trajectories.empty())
    throw DataError("trajectory write: no trajectories");
  const std::size_t T = trajectories.front().size();
  for (const auto& tr : trajectories)
    if (tr.size() != T)
      throw DataError("trajectory write: lengths differ across targets");
  std::ostringstream out;
  out << "t,k,xi,eta,v,phi,a_t,a_n\n";
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
      const kin::KinematicState& s = trajectories[k][t];
      out << t << ',' << k << ',' << format_double(s.xi) << ','
          << format_double(s.eta) << ',' << format_double(s.v) << ','
          << format_double(s.phi) << ',' << format_double(s.a_t) << ','
          << format_double(s.a_n) << '\n';
    }
  write_text(path, out.str());
}

std::vector<std::vector<kin::KinematicState>> read_trajectories_csv(
    const std::string& path) {
  CsvReader csv(path, "t,k,xi,eta,v,phi,a_t,a_n");
  std::map<std::pair<long long, long long>, kin::KinematicState> cells;
  long long t_max = -1, k_max = -1;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& r = csv.rows[i];
    const std::size_t ln = csv.line_of[i];
    const long long t = parse_int(r[0], path, ln);
    const long long k = parse_int(r[1], path, ln);
    if (t < 0 || k < 0)
      throw DataError(path + ":" + std::to_string(ln) + ": negative index");
    kin::KinematicState s;
    s.xi = parse_double(r[2], path, ln);
    s.eta = parse_double(r[3], path, ln);
    s.v = parse_double(r[4], path, ln);
    s.phi = parse_double(r[5], path, ln);
    s.a_t = parse_double(r[6], path, ln);
    s.a_n = parse_double(r[7], path, ln);
    if (!cells.emplace(std::make_pair(t, k), s).second)
      throw DataError(path + ":" + std::to_string(ln) + ": duplicate (t,k)");
    t_max = std::max(t_max, t);
    k_max = std::max(k_max, k);
  }
  if (t_max < 0) throw DataError(path + ": no data rows");
  std::vector<std::vector<kin::KinematicState>> out(
      k_max + 1, std::vector<kin::KinematicState>(t_max + 1));
  for (long long k = 0; k <= k_max; ++k)
    for (long long t = 0; t <= t_max; ++t) {
      auto it = cells.find({t, k});
      if (it == cells.end())
        throw DataError(path + ": missing row for t=" + std::to_string(t) +
                        " k=" + std::to_string(k));
      out[k][t] = it->second;
    }
  return out;
}

void write_measurements_csv(const std::string& path,
                            const std::vector<kin::MeasurementSet>& scans) {
  std::ostringstream out;
  out << "t,kappa,r,bearing,origin\n";
  for (const auto& scan : scans)
    for (std::size_t j = 0; j < scan.meas.size(); ++j)
      out << scan.t << ',' << j << ',' << format_double(scan.meas[j].r) << ','
          << format_double(scan.meas[j].bearing) << ',' << scan.origin[j]
          << '\n';
  write_text(path, out.str());
}

std::vector<kin::MeasurementSet> read_measurements_csv(
    const std::string& path) {
  CsvReader csv(path, "t,kappa,r,bearing,origin");
  std::map<long long, std::map<long long, std::pair<kin::Measurement, int>>>
      by_scan;
  long long t_max = -1;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& r = csv.rows[i];
    const std::size_t ln = csv.line_of[i];
    const long long t = parse_int(r[0], path, ln);
    const long long kappa = parse_int(r[1], path, ln);
    if (t < 0 || kappa < 0)
      throw DataError(path + ":" + std::to_string(ln) + ": negative index");
    kin::Measurement m;
    m.r = parse_double(r[2], path, ln);
    m.bearing = parse_double(r[3], path, ln);
    const int origin = static_cast<int>(parse_int(r[4], path, ln));
    if (!by_scan[t].emplace(kappa, std::make_pair(m, origin)).second)
      throw DataError(path + ":" + std::to_string(ln) +
                      ": duplicate (t,kappa)");
    t_max = std::max(t_max, t);
  }
  std::vector<kin::MeasurementSet> out;
  if (t_max < 0) return out;
  out.resize(t_max + 1);
  for (long long t = 0; t <= t_max; ++t) {
    out[t].t = static_cast<int>(t);
    auto it = by_scan.find(t);
    if (it == by_scan.end()) continue;
    long long expect = 0;
    for (const auto& [kappa, entry] : it->second) {
      if (kappa != expect)
        throw DataError(path + ": scan t=" + std::to_string(t) +
                        " has non-contiguous kappa indices");
      ++expect;
      out[t].meas.push_back(entry.first);
      out[t].origin.push_back(entry.second);
    }
  }
  return out;
}

void write_estimates_csv(
    const std::string& path,
    const std::vector<std::vector<pf::Particle>>& estimates_by_step) {
  std::ostringstream out;
  out << "t,k,xi_hat,eta_hat,dxi_hat,deta_hat\n";
  for (std::size_t t = 0; t < estimates_by_step.size(); ++t)
    for (std::size_t k = 0; k < estimates_by_step[t].size(); ++k) {
      const pf::Particle& p = estimates_by_step[t][k];
      out << t << ',' << k << ',' << format_double(p.xi) << ','
          << format_double(p.eta) << ',' << format_double(p.dxi) << ','
          << format_double(p.deta) << '\n';
    }
  write_text(path, out.str());
}

std::vector<std::vector<pf::Particle>> read_estimates_csv(
    const std::string& path) {
  CsvReader csv(path, "t,k,xi_hat,eta_hat,dxi_hat,deta_hat");
  std::map<std::pair<long long, long long>, pf::Particle> cells;
  long long t_max = -1, k_max = -1;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& r = csv.rows[i];
    const std::size_t ln = csv.line_of[i];
    const long long t = parse_int(r[0], path, ln);
    const long long k = parse_int(r[1], path, ln);
    if (t < 0 || k < 0)
      throw DataError(path + ":" + std::to_string(ln) + ": negative index");
    pf::Particle p;
    p.xi = parse_double(r[2], path, ln);
    p.eta = parse_double(r[3], path, ln);
    p.dxi = parse_double(r[4], path, ln);
    p.deta = parse_double(r[5], path, ln);
    if (!cells.emplace(std::make_pair(t, k), p).second)
      throw DataError(path + ":" + std::to_string(ln) + ": duplicate (t,k)");
    t_max = std::max(t_max, t);
    k_max = std::max(k_max, k);
  }
  if (t_max < 0) throw DataError(path + ": no data rows");
  std::vector<std::vector<pf::Particle>> out(
      t_max + 1, std::vector<pf::Particle>(k_max + 1));
  for (long long t = 0; t <= t_max; ++t)
    for (long long k = 0; k <= k_max; ++k) {
      auto it = cells.find({t, k});
      if (it == cells.end())
        throw DataError(path + ": missing row for t=" + std::to_string(t) +
                        " k=" + std::to_string(k));
      out[t][k] = it->second;
    }
  return out;
}

void write_assoc_csv(const std::string& path,
                     const std::vector<Eigen::MatrixXd>& marginals_by_step) {
  std::ostringstream out;
  out << "t,k,kappa,p_a\n";
  for (std::size_t t = 0; t < marginals_by_step.size(); ++t) {
    const Eigen::MatrixXd& m = marginals_by_step[t];
    for (Eigen::Index k = 0; k < m.rows(); ++k)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        out << t << ',' << k << ',' << (j == 0 ? -1 : static_cast<int>(j) - 1)
            << ',' << format_double(m(k, j)) << '\n';
  }
  write_text(path, out.str());
}

namespace {

const std::map<std::string, kin::Maneuver> kManeuverNames = {
    {"alternating_turns", kin::Maneuver::kAlternatingTurns},
    {"random_turns", kin::Maneuver::kRandomTurns},
    {"random_accel", kin::Maneuver::kRandomAccel},
    {"schedule", kin::Maneuver::kSchedule},
};

std::string maneuver_name(kin::Maneuver m) {
  for (const auto& [name, v] : kManeuverNames)
    if (v == m) return name;
  throw ConfigError("scenario: unknown maneuver kind");
}

kin::ScenarioSpec preset_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "s1_train") return kin::s1_train(seed);
  if (name == "s1_test") return kin::s1_test(seed);
  if (name == "s2_train") return kin::s2_train(seed);
  if (name == "s2_test") return kin::s2_test(seed);
  if (name == "s3_test") return kin::s3_test(seed);
  if (name == "custom") {
    kin::ScenarioSpec s;
    s.seed = seed;
    s.initial_states.clear();
    return s;
  }
  throw ConfigError("scenario: unknown name '" + name +
                    "' (expected s1_train, s1_test, s2_train, s2_test, "
                    "s3_test, or custom)");
}

}  // namespace

kin::ScenarioSpec scenario_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario config must be an object");
  if (!j.contains("seed") || !j["seed"].is_number_unsigned())
    throw ConfigError("scenario config requires an unsigned integer 'seed'");
  const std::string name = j.value("scenario", std::string("custom"));
  kin::ScenarioSpec s = preset_by_name(name, j["seed"].get<std::uint64_t>());

  static const std::vector<std::string> known = {
      "scenario", "seed", "num_steps", "dt", "maneuver", "turn_rate_deg",
      "turn_block", "accel_levels", "initial_states", "schedules", "sigma_r",
      "sigma_b_deg", "p_d", "lambda_fa", "region"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("scenario config: unknown key '" + key + "'");
  }

  if (j.contains("num_steps")) s.num_steps = j["num_steps"].get<int>();
  if (j.contains("dt")) s.dt = j["dt"].get<double>();
  if (j.contains("maneuver")) {
    const std::string m = j["maneuver"].get<std::string>();
    auto it = kManeuverNames.find(m);
    if (it == kManeuverNames.end())
      throw ConfigError("scenario config: unknown maneuver '" + m + "'");
    s.maneuver = it->second;
  }
  if (j.contains("turn_rate_deg"))
    s.turn_rate = deg2rad(j["turn_rate_deg"].get<double>());
  if (j.contains("turn_block")) s.turn_block = j["turn_block"].get<int>();
  if (j.contains("accel_levels"))
    s.accel_levels = j["accel_levels"].get<std::vector<double>>();
  if (j.contains("initial_states")) {
    s.initial_states.clear();
    for (const auto& st : j["initial_states"]) {
      kin::KinematicState k0;
      k0.xi = st.value("xi", 0.0);
      k0.eta = st.value("eta", 0.0);
      k0.v = st.value("v", 15.0);
      k0.phi = st.value("phi", 0.0);
      s.initial_states.push_back(k0);
    }
  }
  if (j.contains("schedules")) {
    s.schedules.clear();
    for (const auto& sched : j["schedules"]) {
      std::vector<kin::ManeuverStep> steps;
      for (const auto& u : sched)
        steps.push_back({u.value("a_t", 0.0), u.value("a_n", 0.0)});
      s.schedules.push_back(std::move(steps));
    }
  }
  if (j.contains("sigma_r")) s.sigma_r = j["sigma_r"].get<double>();
  if (j.contains("sigma_b_deg"))
    s.sigma_b = deg2rad(j["sigma_b_deg"].get<double>());
  if (j.contains("p_d")) s.p_d = j["p_d"].get<double>();
  if (j.contains("lambda_fa")) s.lambda_fa = j["lambda_fa"].get<double>();
  if (j.contains("region")) {
    const auto& r = j["region"];
    s.region.xi_min = r.value("xi_min", s.region.xi_min);
    s.region.xi_max = r.value("xi_max", s.region.xi_max);
    s.region.eta_min = r.value("eta_min", s.region.eta_min);
    s.region.eta_max = r.value("eta_max", s.region.eta_max);
  }

  if (s.num_steps <= 0) throw ConfigError("scenario: num_steps must be > 0");
  if (!(s.dt > 0.0)) throw ConfigError("scenario: dt must be > 0");
  if (s.initial_states.empty())
    throw ConfigError("scenario: needs at least one initial state");
  if (!(s.p_d > 0.0 && s.p_d <= 1.0))
    throw ConfigError("scenario: p_d must lie in (0, 1]");
  if (s.lambda_fa < 0.0) throw ConfigError("scenario: lambda_fa must be >= 0");
  if (!(s.region.xi_min < s.region.xi_max) ||
      !(s.region.eta_min < s.region.eta_max))
    throw ConfigError("scenario: region min must be < max per axis");
  return s;
}

json scenario_to_json(const kin::ScenarioSpec& spec, const std::string& name) {
  json j;
  j["scenario"] = name;
  j["seed"] = spec.seed;
  j["num_steps"] = spec.num_steps;
  j["dt"] = spec.dt;
  j["maneuver"] = maneuver_name(spec.maneuver);
  j["turn_rate_deg"] = rad2deg(spec.turn_rate);
  j["turn_block"] = spec.turn_block;
  j["accel_levels"] = spec.accel_levels;
  j["initial_states"] = json::array();
  for (const auto& s : spec.initial_states)
    j["initial_states"].push_back(
        {{"xi", s.xi}, {"eta", s.eta}, {"v", s.v}, {"phi", s.phi}});
  if (!spec.schedules.empty()) {
    j["schedules"] = json::array();
    for (const auto& sched : spec.schedules) {
      json arr = json::array();
      for (const auto& u : sched)
        arr.push_back({{"a_t", u.a_t}, {"a_n", u.a_n}});
      j["schedules"].push_back(arr);
    }
  }
  j["sigma_r"] = spec.sigma_r;
  j["sigma_b_deg"] = rad2deg(spec.sigma_b);
  j["p_d"] = spec.p_d;
  j["lambda_fa"] = spec.lambda_fa;
  j["region"] = {{"xi_min", spec.region.xi_min},
                 {"xi_max", spec.region.xi_max},
                 {"eta_min", spec.region.eta_min},
                 {"eta_max", spec.region.eta_max}};
  return j;
}

kin::ScenarioSpec load_scenario(const std::string& path) {
  return scenario_from_json(read_json_file(path));
}

namespace {

json gp_to_json(const gpr::GpModel& m) {
  json j;
  j["length_scale"] = m.hp.length_scale;
  j["signal_var"] = m.hp.signal_var;
  j["noise_var"] = m.hp.noise_var;
  json inputs = json::array();
  for (Eigen::Index i = 0; i < m.inputs.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.inputs.cols(); ++c)
      row.push_back(m.inputs(i, c));
    inputs.push_back(row);
  }
  j["inputs"] = inputs;
  j["targets"] = std::vector<double>(m.targets.begin(), m.targets.end());
  return j;
}

gpr::GpModel gp_from_json(const json& j) {
  gpr::Hyperparameters hp;
  hp.length_scale = j.at("length_scale").get<double>();
  hp.signal_var = j.at("signal_var").get<double>();
  hp.noise_var = j.at("noise_var").get<double>();
  const auto& rows = j.at("inputs");
  if (rows.empty()) throw DataError("model file: empty training inputs");
  Eigen::MatrixXd X(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw DataError("model file: ragged input rows");
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      X(i, c) = rows[i][c].get<double>();
  }
  const auto y_vec = j.at("targets").get<std::vector<double>>();
  if (y_vec.size() != rows.size())
    throw DataError("model file: inputs/targets length mismatch");
  Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(y_vec.data(), y_vec.size());
  return gpr::fit(X, y, hp);
}

}  // namespace

void save_model(const std::string& path, const nsim::NsimModel& model) {
  json j;
  j["format"] = "gptrack-nsim-model";
  j["version"] = 1;
  j["dt"] = model.dt;
  j["shared_hyperparameters"] = model.shared_hyperparameters;
  j["gp_xi"] = gp_to_json(model.gp_xi);
  j["gp_eta"] = gp_to_json(model.gp_eta);
  write_json_file(path, j);
}

nsim::NsimModel load_model(const std::string& path) {
  const json j = read_json_file(path);
  if (j.value("format", std::string()) != "gptrack-nsim-model")
    throw DataError(path + ": not a motion-model file");
  nsim::NsimModel m;
  m.dt = j.value("dt", 1.0);
  m.shared_hyperparameters = j.value("shared_hyperparameters", true);
  m.gp_xi = gp_from_json(j.at("gp_xi"));
  m.gp_eta = gp_from_json(j.at("gp_eta"));
  if (m.gp_xi.inputs.rows() != m.gp_eta.inputs.rows())
    throw DataError(path + ": per-axis training sets differ in size");
  return m;
}

void write_manifest(const std::string& dir, const json& manifest) {
  write_json_file((std::filesystem::path(dir) / "manifest.json").string(),
                  manifest);
}

json read_json_file(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": JSON parse error: " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace gptrack::io
