#include "gptrack/pf.hpp"

#include <cmath>

namespace gptrack::pf {

ParticleSet ParticleSet::zeros(int m) {
  if (m <= 0) throw ConfigError("pf: particle count must be positive");
  ParticleSet ps;
  ps.xi = Eigen::VectorXd::Zero(m);
  ps.eta = Eigen::VectorXd::Zero(m);
  ps.dxi = Eigen::VectorXd::Zero(m);
  ps.deta = Eigen::VectorXd::Zero(m);
  ps.w = Eigen::VectorXd::Constant(m, 1.0 / m);
  return ps;
}

ParticleSet initialize_particles(const Particle& center, double pos_spread,
                                 double vel_spread, int num_particles,
                                 Rng& rng) {
  if (pos_spread < 0.0 || vel_spread < 0.0)
    throw ConfigError("pf: init spreads must be non-negative");
  ParticleSet ps = ParticleSet::zeros(num_particles);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int m = 0; m < num_particles; ++m) {
    ps.xi[m] = center.xi + pos_spread * n01(rng);
    ps.eta[m] = center.eta + pos_spread * n01(rng);
    ps.dxi[m] = center.dxi + vel_spread * n01(rng);
    ps.deta[m] = center.deta + vel_spread * n01(rng);
  }
  return ps;
}

Particle center_from_fixes(const kin::Measurement& first,
                           const kin::Measurement* second) {
  double x0, y0;
  kin::fix_from_measurement(first, x0, y0);
  Particle c{x0, y0, 0.0, 0.0};
  if (second != nullptr) {
    double x1, y1;
    kin::fix_from_measurement(*second, x1, y1);
    c.dxi = x1 - x0;
    c.deta = y1 - y0;
  }
  return c;
}

ParticleSet initialize_from_fixes(const std::vector<kin::Measurement>& fixes,
                                  double pos_spread, double vel_spread,
                                  int num_particles, Rng& rng) {
  if (fixes.size() < 2)
    throw DataError("pf: need two fixes to initialize without a prior state");
  const Particle center = center_from_fixes(fixes[0], &fixes[1]);
  return initialize_particles(center, pos_spread, vel_spread, num_particles,
                              rng);
}

void propagate(ParticleSet& ps, const nsim::NsimModel& model,
               const FilterConfig& cfg, int t) {
  if (cfg.q_xi < 0.0 || cfg.q_eta < 0.0)
    throw ConfigError("pf: process-noise variances must be non-negative");
  const int M = ps.size();
  Eigen::MatrixXd cur(M, 2);
  cur.col(0) = ps.dxi;
  cur.col(1) = ps.deta;
  Eigen::VectorXd mx, vx, me, ve;
  nsim::predict_delta_batch(model, cur, mx, vx, me, ve);

  const double sq_xi = std::sqrt(cfg.q_xi);
  const double sq_eta = std::sqrt(cfg.q_eta);
  for (int m = 0; m < M; ++m) {
    Rng rng = make_rng(cfg.seed, {stream::kPropagate, cfg.target_key,
                                  static_cast<std::uint64_t>(t),
                                  static_cast<std::uint64_t>(m)});
    std::normal_distribution<double> n01(0.0, 1.0);
    const double ndx = n01(rng), nde = n01(rng), nx = n01(rng), ne = n01(rng);
    ps.dxi[m] = mx[m] + std::sqrt(vx[m]) * ndx;
    ps.deta[m] = me[m] + std::sqrt(ve[m]) * nde;
    ps.xi[m] += ps.dxi[m] + sq_xi * nx;
    ps.eta[m] += ps.deta[m] + sq_eta * ne;
  }
}

double measurement_likelihood(double xi, double eta, const kin::Measurement& z,
                              double sigma_r, double sigma_b) {
  const double r = std::hypot(xi, eta);
  const double b = std::atan2(xi, eta);
  const double dr = z.r - r;
  const double db = wrap_angle(z.bearing - b);
  const double e = dr * dr / (sigma_r * sigma_r) + db * db / (sigma_b * sigma_b);
  return std::exp(-0.5 * e) / (2.0 * kPi * sigma_r * sigma_b);
}

void weight_update_stt(ParticleSet& ps, const kin::Measurement& z,
                       double sigma_r, double sigma_b) {
  if (!(sigma_r > 0.0) || !(sigma_b > 0.0))
    throw ConfigError("pf: measurement noise stds must be positive");
  const int M = ps.size();
  for (int m = 0; m < M; ++m)
    ps.w[m] *= measurement_likelihood(ps.xi[m], ps.eta[m], z, sigma_r, sigma_b);
  const double s = ps.w.sum();
  if (!(s > 0.0) || !std::isfinite(s))
    throw DegenerateWeightsError("pf: all particle weights vanished");
  ps.w /= s;
}

double ess(const ParticleSet& ps) {
  const double s = ps.w.sum();
  const double s2 = ps.w.squaredNorm();
  if (!(s2 > 0.0)) throw DegenerateWeightsError("pf: zero weight vector");
  return s * s / s2;
}

Particle estimate(const ParticleSet& ps) {
  const double s = ps.w.sum();
  if (!(s > 0.0)) throw DegenerateWeightsError("pf: zero weight vector");
  return {ps.xi.dot(ps.w) / s, ps.eta.dot(ps.w) / s, ps.dxi.dot(ps.w) / s,
          ps.deta.dot(ps.w) / s};
}

void systematic_resample(ParticleSet& ps, Rng& rng) {
  const int M = ps.size();
  const double s = ps.w.sum();
  if (!(s > 0.0) || !std::isfinite(s))
    throw DegenerateWeightsError("pf: cannot resample zero weights");

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

  ParticleSet out = ParticleSet::zeros(M);
  for (int m = 0; m < M; ++m) {
    out.xi[m] = ps.xi[idx[m]];
    out.eta[m] = ps.eta[idx[m]];
    out.dxi[m] = ps.dxi[idx[m]];
    out.deta[m] = ps.deta[idx[m]];
  }
  ps = std::move(out);
}

namespace {

void respread(ParticleSet& ps, const kin::Measurement& z, double sigma_r,
              const FilterConfig& cfg, int t) {
  double fx, fy;
  kin::fix_from_measurement(z, fx, fy);
  Rng rng = make_rng(cfg.seed, {stream::kRespread, cfg.target_key,
                                static_cast<std::uint64_t>(t)});
  std::normal_distribution<double> n01(0.0, 1.0);
  const double spread = 3.0 * sigma_r;
  for (int m = 0; m < ps.size(); ++m) {
    ps.xi[m] = fx + spread * n01(rng);
    ps.eta[m] = fy + spread * n01(rng);
  }
  ps.w.setConstant(1.0 / ps.size());
}

}  // namespace

SttResult track_stt(const nsim::NsimModel& model,
                    const std::vector<kin::Measurement>& meas,
                    const FilterConfig& cfg) {
  SttResult res;
  if (meas.empty()) return res;

  const int T = static_cast<int>(meas.size());
  const Particle center =
      center_from_fixes(meas[0], T >= 2 ? &meas[1] : nullptr);
  Rng init_rng = make_rng(cfg.seed, {stream::kInit, cfg.target_key});
  ParticleSet ps = initialize_particles(center, cfg.init_pos_spread(),
                                        cfg.init_vel_spread(),
                                        cfg.num_particles, init_rng);
  res.estimates.push_back(estimate(ps));
  res.ess.push_back(ess(ps));

  for (int t = 1; t < T; ++t) {
    propagate(ps, model, cfg, t);
    try {
      weight_update_stt(ps, meas[t], cfg.sigma_r, cfg.sigma_b);
    } catch (const DegenerateWeightsError&) {
      respread(ps, meas[t], cfg.sigma_r, cfg, t);
      res.respread_steps.push_back(t);
    }
    res.estimates.push_back(estimate(ps));
    res.ess.push_back(ess(ps));

    const bool do_resample =
        cfg.resample_mode == ResampleMode::kEveryStep ||
        ess(ps) < cfg.ess_fraction * cfg.num_particles;
    if (do_resample) {
      Rng r = make_rng(cfg.seed, {stream::kResample, cfg.target_key,
                                  static_cast<std::uint64_t>(t)});
      systematic_resample(ps, r);
    }
  }
  return res;
}

}  // namespace gptrack::pf
