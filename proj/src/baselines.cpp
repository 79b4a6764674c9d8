#include "gptrack/baselines.hpp"

#include <cmath>

namespace gptrack::baselines {

namespace {

std::vector<std::optional<kin::Measurement>> to_optional(
    const std::vector<kin::Measurement>& meas) {
  std::vector<std::optional<kin::Measurement>> out;
  out.reserve(meas.size());
  for (const auto& m : meas) out.emplace_back(m);
  return out;
}

KinParticleSet init_kin_cloud(const kin::KinematicState& s0,
                              const BaselineConfig& cfg, Rng& rng) {
  KinParticleSet ps;
  const int M = cfg.num_particles;
  if (M < 1) throw ConfigError("baselines: particle count must be positive");
  ps.xi.resize(M);
  ps.eta.resize(M);
  ps.v.resize(M);
  ps.phi.resize(M);
  ps.w = Eigen::VectorXd::Constant(M, 1.0 / M);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double sp = cfg.init_pos_spread();
  for (int m = 0; m < M; ++m) {
    ps.xi[m] = s0.xi + sp * n01(rng);
    ps.eta[m] = s0.eta + sp * n01(rng);
    ps.v[m] = std::max(s0.v + cfg.speed_spread * n01(rng), kin::kMinSpeed);
    ps.phi[m] = wrap_angle(s0.phi + cfg.heading_spread * n01(rng));
  }
  return ps;
}

pf::Particle kin_estimate(const KinParticleSet& ps, double dt) {
  const double s = ps.w.sum();
  if (!(s > 0.0)) throw DegenerateWeightsError("baselines: zero weight vector");
  const double xi = ps.xi.dot(ps.w) / s;
  const double eta = ps.eta.dot(ps.w) / s;
  // Velocity summary via the weighted mean Cartesian velocity.
  double vx = 0.0, vy = 0.0;
  for (int m = 0; m < ps.size(); ++m) {
    vx += ps.w[m] * ps.v[m] * std::cos(ps.phi[m]);
    vy += ps.w[m] * ps.v[m] * std::sin(ps.phi[m]);
  }
  return {xi, eta, vx / s * dt, vy / s * dt};
}

double kin_ess(const KinParticleSet& ps) {
  const double s = ps.w.sum();
  const double s2 = ps.w.squaredNorm();
  if (!(s2 > 0.0)) throw DegenerateWeightsError("baselines: zero weight vector");
  return s * s / s2;
}

void kin_resample(KinParticleSet& ps, Rng& rng) {
  const int M = ps.size();
  const double s = ps.w.sum();
  if (!(s > 0.0) || !std::isfinite(s))
    throw DegenerateWeightsError("baselines: cannot resample zero weights");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u0 = u01(rng);
  std::vector<int> idx(M);
  double cum = ps.w[0] / s;
  int j = 0;
  for (int m = 0; m < M; ++m) {
    const double u = (m + u0) / M;
    while (u > cum && j + 1 < M) cum += ps.w[++j] / s;
    idx[m] = j;
  }
  KinParticleSet out;
  out.xi.resize(M);
  out.eta.resize(M);
  out.v.resize(M);
  out.phi.resize(M);
  out.w = Eigen::VectorXd::Constant(M, 1.0 / M);
  for (int m = 0; m < M; ++m) {
    out.xi[m] = ps.xi[idx[m]];
    out.eta[m] = ps.eta[idx[m]];
    out.v[m] = ps.v[idx[m]];
    out.phi[m] = ps.phi[idx[m]];
  }
  ps = std::move(out);
}

void kin_respread(KinParticleSet& ps, const kin::Measurement& z,
                  const BaselineConfig& cfg, int t, std::uint64_t salt) {
  double fx, fy;
  kin::fix_from_measurement(z, fx, fy);
  Rng rng = make_rng(cfg.seed, {stream::kRespread, cfg.target_key,
                                static_cast<std::uint64_t>(t), salt});
  std::normal_distribution<double> n01(0.0, 1.0);
  const double spread = 3.0 * cfg.sigma_r;
  for (int m = 0; m < ps.size(); ++m) {
    ps.xi[m] = fx + spread * n01(rng);
    ps.eta[m] = fy + spread * n01(rng);
  }
  ps.w.setConstant(1.0 / ps.size());
}

}  // namespace

pf::SttResult track_oracle_pf(
    const std::vector<kin::KinematicState>& truth,
    const std::vector<std::optional<kin::Measurement>>& meas,
    const BaselineConfig& cfg) {
  if (truth.size() != meas.size())
    throw DataError("oracle pf: truth/measurement lengths differ");
  pf::SttResult res;
  if (meas.empty()) return res;

  Rng init_rng = make_rng(cfg.seed, {stream::kInit, cfg.target_key});
  KinParticleSet ps = init_kin_cloud(truth[0], cfg, init_rng);
  res.estimates.push_back(kin_estimate(ps, cfg.dt));
  res.ess.push_back(kin_ess(ps));

  const double sq_xi = std::sqrt(cfg.q_xi);
  const double sq_eta = std::sqrt(cfg.q_eta);
  const int T = static_cast<int>(truth.size());
  for (int t = 1; t < T; ++t) {
    // True maneuver over [t-1, t), known to the oracle.
    const double a_t = truth[t - 1].a_t;
    const double a_n = truth[t - 1].a_n;
    for (int m = 0; m < ps.size(); ++m) {
      Rng rng = make_rng(cfg.seed, {stream::kPropagate, cfg.target_key,
                                    static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(m)});
      std::normal_distribution<double> n01(0.0, 1.0);
      const kin::KinematicState next = kin::step_curvilinear(
          {ps.xi[m], ps.eta[m], ps.v[m], ps.phi[m], a_t, a_n}, cfg.dt);
      ps.xi[m] = next.xi + sq_xi * n01(rng);
      ps.eta[m] = next.eta + sq_eta * n01(rng);
      ps.v[m] = next.v;
      ps.phi[m] = next.phi;
    }

    if (meas[t].has_value()) {
      const kin::Measurement& z = *meas[t];
      for (int m = 0; m < ps.size(); ++m)
        ps.w[m] *= pf::measurement_likelihood(ps.xi[m], ps.eta[m], z,
                                              cfg.sigma_r, cfg.sigma_b);
      const double s = ps.w.sum();
      if (!(s > 0.0) || !std::isfinite(s)) {
        kin_respread(ps, z, cfg, t, 0);
        res.respread_steps.push_back(t);
      } else {
        ps.w /= s;
      }
    }

    res.estimates.push_back(kin_estimate(ps, cfg.dt));
    res.ess.push_back(kin_ess(ps));

    const bool do_resample =
        cfg.resample_mode == pf::ResampleMode::kEveryStep ||
        kin_ess(ps) < cfg.ess_fraction * cfg.num_particles;
    if (do_resample) {
      Rng rng = make_rng(cfg.seed, {stream::kResample, cfg.target_key,
                                    static_cast<std::uint64_t>(t)});
      kin_resample(ps, rng);
    }
  }
  return res;
}

pf::SttResult track_oracle_pf(const std::vector<kin::KinematicState>& truth,
                              const std::vector<kin::Measurement>& meas,
                              const BaselineConfig& cfg) {
  return track_oracle_pf(truth, to_optional(meas), cfg);
}

ImmConfig imm2_turning(double rate, double self_prob) {
  ImmConfig c;
  ImmModel left;
  left.turn_rate = rate;
  ImmModel right;
  right.turn_rate = -rate;
  c.models = {left, right};
  c.transition.resize(2, 2);
  c.transition << self_prob, 1.0 - self_prob, 1.0 - self_prob, self_prob;
  c.initial_probs = Eigen::VectorXd::Constant(2, 0.5);
  return c;
}

ImmConfig imm9_accel(const std::vector<double>& levels, double self_prob) {
  if (levels.empty()) throw ConfigError("imm9: acceleration levels empty");
  ImmConfig c;
  for (double at : levels)
    for (double an : levels) {
      ImmModel m;
      m.a_t = at;
      m.a_n = an;
      m.randomize_signs = true;
      c.models.push_back(m);
    }
  const int J = static_cast<int>(c.models.size());
  c.transition = Eigen::MatrixXd::Constant(J, J, (1.0 - self_prob) / (J - 1));
  c.transition.diagonal().setConstant(self_prob);
  c.initial_probs = Eigen::VectorXd::Constant(J, 1.0 / J);
  return c;
}

namespace {

void check_imm(const ImmConfig& imm) {
  const int J = static_cast<int>(imm.models.size());
  if (J == 0) throw ConfigError("imm: empty model bank");
  if (imm.transition.rows() != J || imm.transition.cols() != J)
    throw ConfigError("imm: transition matrix shape mismatch");
  if (imm.initial_probs.size() != J)
    throw ConfigError("imm: initial probabilities shape mismatch");
  for (int i = 0; i < J; ++i) {
    if (std::abs(imm.transition.row(i).sum() - 1.0) > 1e-9)
      throw ConfigError("imm: transition rows must sum to 1");
    if ((imm.transition.row(i).array() < 0.0).any())
      throw ConfigError("imm: transition entries must be non-negative");
  }
}

}  // namespace

ImmResult track_imm_pf(const ImmConfig& imm,
                       const kin::KinematicState& init_state,
                       const std::vector<std::optional<kin::Measurement>>& meas,
                       const BaselineConfig& cfg) {
  check_imm(imm);
  ImmResult res;
  const int J = static_cast<int>(imm.models.size());
  const int M = cfg.num_particles;
  const int T = static_cast<int>(meas.size());
  res.model_probs.resize(T, J);
  if (T == 0) return res;

  // All models start from one shared cloud around the initial state.
  Rng init_rng = make_rng(cfg.seed, {stream::kInit, cfg.target_key});
  std::vector<KinParticleSet> bank(J, init_kin_cloud(init_state, cfg, init_rng));
  Eigen::VectorXd mu = imm.initial_probs;

  res.track.estimates.push_back(kin_estimate(bank[0], cfg.dt));
  res.track.ess.push_back(kin_ess(bank[0]));
  res.model_probs.row(0) = mu.transpose();

  const double sq_xi = std::sqrt(cfg.q_xi);
  const double sq_eta = std::sqrt(cfg.q_eta);
  for (int t = 1; t < T; ++t) {
    // Interaction: predicted model probabilities and per-model mixed clouds
    // drawn from the switching prior.
    const Eigen::VectorXd c_pred = imm.transition.transpose() * mu;
    Rng mix_rng = make_rng(cfg.seed, {stream::kMixing, cfg.target_key,
                                      static_cast<std::uint64_t>(t)});
    std::vector<KinParticleSet> mixed(J);
    for (int j = 0; j < J; ++j) {
      if (c_pred[j] <= 0.0) {
        mixed[j] = bank[j];  // dead model: keep previous cloud, weight 0
        continue;
      }
      Eigen::VectorXd src_probs(J);
      for (int i = 0; i < J; ++i) src_probs[i] = imm.transition(i, j) * mu[i];
      std::discrete_distribution<int> pick_model(src_probs.begin(),
                                                 src_probs.end());
      KinParticleSet out;
      out.xi.resize(M);
      out.eta.resize(M);
      out.v.resize(M);
      out.phi.resize(M);
      out.w = Eigen::VectorXd::Constant(M, 1.0 / M);
      for (int m = 0; m < M; ++m) {
        const int i = pick_model(mix_rng);
        std::discrete_distribution<int> pick_particle(bank[i].w.begin(),
                                                      bank[i].w.end());
        const int p = pick_particle(mix_rng);
        out.xi[m] = bank[i].xi[p];
        out.eta[m] = bank[i].eta[p];
        out.v[m] = bank[i].v[p];
        out.phi[m] = bank[i].phi[p];
      }
      mixed[j] = std::move(out);
    }
    bank = std::move(mixed);

    // Per-model propagation under the model's maneuver hypothesis.
    for (int j = 0; j < J; ++j) {
      const ImmModel& mdl = imm.models[j];
      KinParticleSet& ps = bank[j];
      for (int m = 0; m < M; ++m) {
        Rng rng = make_rng(cfg.seed,
                           {stream::kPropagate, cfg.target_key,
                            static_cast<std::uint64_t>(t),
                            static_cast<std::uint64_t>(j) * M + m});
        std::normal_distribution<double> n01(0.0, 1.0);
        double a_t = mdl.a_t;
        double a_n = (mdl.turn_rate != 0.0) ? mdl.turn_rate * ps.v[m] : mdl.a_n;
        if (mdl.randomize_signs) {
          std::uniform_int_distribution<int> coin(0, 1);
          if (coin(rng)) a_t = -a_t;
          if (coin(rng)) a_n = -a_n;
        }
        const kin::KinematicState next = kin::step_curvilinear(
            {ps.xi[m], ps.eta[m], ps.v[m], ps.phi[m], a_t, a_n}, cfg.dt);
        ps.xi[m] = next.xi + sq_xi * n01(rng);
        ps.eta[m] = next.eta + sq_eta * n01(rng);
        ps.v[m] = next.v;
        ps.phi[m] = next.phi;
      }
    }

    // Measurement update and model likelihoods.
    Eigen::VectorXd lambda = Eigen::VectorXd::Ones(J);
    if (meas[t].has_value()) {
      const kin::Measurement& z = *meas[t];
      bool any_alive = false;
      for (int j = 0; j < J; ++j) {
        KinParticleSet& ps = bank[j];
        double sum = 0.0;
        for (int m = 0; m < M; ++m) {
          ps.w[m] = pf::measurement_likelihood(ps.xi[m], ps.eta[m], z,
                                               cfg.sigma_r, cfg.sigma_b);
          sum += ps.w[m];
        }
        lambda[j] = sum / M;
        if (sum > 0.0 && std::isfinite(sum)) {
          ps.w /= sum;
          any_alive = true;
        } else {
          lambda[j] = 0.0;
          ps.w.setConstant(1.0 / M);
        }
      }
      if (!any_alive) {
        for (int j = 0; j < J; ++j)
          kin_respread(bank[j], z, cfg, t, static_cast<std::uint64_t>(j));
        lambda.setOnes();
        res.track.respread_steps.push_back(t);
      }
    }

    Eigen::VectorXd mu_new = c_pred.cwiseProduct(lambda);
    const double mu_sum = mu_new.sum();
    if (mu_sum > 0.0 && std::isfinite(mu_sum)) {
      mu = mu_new / mu_sum;
    } else {
      mu.setConstant(1.0 / J);
    }

    // Probability-weighted combined estimate.
    pf::Particle comb{0, 0, 0, 0};
    double ess_mix = 0.0;
    for (int j = 0; j < J; ++j) {
      if (mu[j] == 0.0) continue;
      const pf::Particle e = kin_estimate(bank[j], cfg.dt);
      comb.xi += mu[j] * e.xi;
      comb.eta += mu[j] * e.eta;
      comb.dxi += mu[j] * e.dxi;
      comb.deta += mu[j] * e.deta;
      ess_mix += mu[j] * kin_ess(bank[j]);
    }
    res.track.estimates.push_back(comb);
    res.track.ess.push_back(ess_mix);
    res.model_probs.row(t) = mu.transpose();

    for (int j = 0; j < J; ++j) {
      const bool do_resample =
          cfg.resample_mode == pf::ResampleMode::kEveryStep ||
          kin_ess(bank[j]) < cfg.ess_fraction * cfg.num_particles;
      if (do_resample) {
        Rng rng = make_rng(cfg.seed, {stream::kResample, cfg.target_key,
                                      static_cast<std::uint64_t>(t),
                                      static_cast<std::uint64_t>(j)});
        kin_resample(bank[j], rng);
      }
    }
  }
  return res;
}

ImmResult track_imm_pf(const ImmConfig& imm,
                       const kin::KinematicState& init_state,
                       const std::vector<kin::Measurement>& meas,
                       const BaselineConfig& cfg) {
  return track_imm_pf(imm, init_state, to_optional(meas), cfg);
}

}  // namespace gptrack::baselines
