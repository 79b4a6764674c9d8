#include "gptrack/mtt.hpp"

#include <cmath>

namespace gptrack::mtt {

void weight_update_mtt(pf::ParticleSet& ps, const kin::MeasurementSet& scan,
                       const Eigen::VectorXd& marginals_row, double sigma_r,
                       double sigma_b, double p_d, bool missed_term) {
  const int Kt = static_cast<int>(scan.meas.size());
  if (marginals_row.size() != Kt + 1)
    throw DataError("mtt: marginals row length mismatch");
  if (Kt == 0) return;  // no detection hypotheses: posterior equals prior

  const int M = ps.size();
  for (int m = 0; m < M; ++m) {
    double factor = 0.0;
    for (int kappa = 0; kappa < Kt; ++kappa)
      factor += marginals_row[kappa + 1] *
                pf::measurement_likelihood(ps.xi[m], ps.eta[m],
                                           scan.meas[kappa], sigma_r, sigma_b);
    if (missed_term) factor += marginals_row[0] * (1.0 - p_d);
    ps.w[m] *= factor;
  }
  const double s = ps.w.sum();
  if (!(s > 0.0) || !std::isfinite(s))
    throw DegenerateWeightsError("mtt: all particle weights vanished");
  ps.w /= s;
}

namespace {

// Shared-factorization batch proposal across all targets: one motion-model
// query covers every particle of every target.
void propagate_all(std::vector<pf::ParticleSet>& targets,
                   const nsim::NsimModel& model, const MttConfig& cfg, int t) {
  const int K = static_cast<int>(targets.size());
  const int M = cfg.num_particles;
  Eigen::MatrixXd cur(K * M, 2);
  for (int k = 0; k < K; ++k) {
    cur.block(k * M, 0, M, 1) = targets[k].dxi;
    cur.block(k * M, 1, M, 1) = targets[k].deta;
  }
  Eigen::VectorXd mx, vx, me, ve;
  nsim::predict_delta_batch(model, cur, mx, vx, me, ve);

  const double sq_xi = std::sqrt(cfg.q_xi);
  const double sq_eta = std::sqrt(cfg.q_eta);
  for (int k = 0; k < K; ++k) {
    pf::ParticleSet& ps = targets[k];
    const std::uint64_t key = cfg.target_keys[k];
    for (int m = 0; m < M; ++m) {
      Rng rng = make_rng(cfg.seed, {stream::kPropagate, key,
                                    static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(m)});
      std::normal_distribution<double> n01(0.0, 1.0);
      const double ndx = n01(rng), nde = n01(rng), nx = n01(rng),
                   ne = n01(rng);
      const int row = k * M + m;
      ps.dxi[m] = mx[row] + std::sqrt(vx[row]) * ndx;
      ps.deta[m] = me[row] + std::sqrt(ve[row]) * nde;
      ps.xi[m] += ps.dxi[m] + sq_xi * nx;
      ps.eta[m] += ps.deta[m] + sq_eta * ne;
    }
  }
}

void respread_around(pf::ParticleSet& ps, double cx, double cy, double spread,
                     std::uint64_t seed, std::uint64_t key, int t) {
  Rng rng = make_rng(seed, {stream::kRespread, key,
                            static_cast<std::uint64_t>(t)});
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int m = 0; m < ps.size(); ++m) {
    ps.xi[m] = cx + spread * n01(rng);
    ps.eta[m] = cy + spread * n01(rng);
  }
  ps.w.setConstant(1.0 / ps.size());
}

}  // namespace

MttResult track_mtt(const nsim::NsimModel& model,
                    const std::vector<kin::MeasurementSet>& scans,
                    const std::vector<pf::Particle>& init_centers,
                    const MttConfig& cfg) {
  const int K = static_cast<int>(init_centers.size());
  if (K < 1) throw ConfigError("mtt: need at least one target");
  if (cfg.num_particles < 1)
    throw ConfigError("mtt: particle count must be positive");

  MttConfig c = cfg;
  if (c.target_keys.empty()) {
    c.target_keys.resize(K);
    for (int k = 0; k < K; ++k) c.target_keys[k] = k;
  }
  if (static_cast<int>(c.target_keys.size()) != K)
    throw ConfigError("mtt: target_keys size must match target count");

  MttResult res;
  if (scans.empty()) return res;

  std::vector<pf::ParticleSet> targets;
  targets.reserve(K);
  for (int k = 0; k < K; ++k) {
    Rng rng = make_rng(c.seed, {stream::kInit, c.target_keys[k]});
    targets.push_back(pf::initialize_particles(init_centers[k],
                                               c.init_pos_spread(),
                                               c.init_vel_spread(),
                                               c.num_particles, rng));
  }

  const int T = static_cast<int>(scans.size());
  for (int t = 0; t < T; ++t) {
    StepDiagnostics diag;
    if (t == 0) {
      // Scan 0 is the initialization epoch: clouds were just seeded from
      // init_centers, no update.
      res.marginals.emplace_back(
          Eigen::MatrixXd::Zero(K, scans[0].meas.size() + 1));
    } else {
      propagate_all(targets, model, c, t);

      const assoc::AssociationFactors factors = assoc::compute_factors(
          targets, scans[t], c.sigma_r, c.sigma_b, c.p_d, c.lambda_fa);
      const assoc::Marginals marg = assoc::run_bp(factors, c.bp);
      diag.bp_converged = marg.converged;
      diag.bp_iterations = marg.iterations;
      res.marginals.push_back(marg.target_to_meas);

      for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd row = marg.target_to_meas.row(k).transpose();
        const Eigen::VectorXd w_before = targets[k].w;
        try {
          weight_update_mtt(targets[k], scans[t], row, c.sigma_r, c.sigma_b,
                            c.p_d, c.missed_detection_term);
        } catch (const DegenerateWeightsError&) {
          targets[k].w = w_before;
          int best = -1;
          if (row.size() > 1) {
            Eigen::Index bi = 0;
            row.tail(row.size() - 1).maxCoeff(&bi);
            // Only snap to a measurement that beats the missed hypothesis.
            if (row[bi + 1] > row[0]) best = static_cast<int>(bi);
          }
          if (best >= 0) {
            double fx, fy;
            kin::fix_from_measurement(scans[t].meas[best], fx, fy);
            respread_around(targets[k], fx, fy, 3.0 * c.sigma_r, c.seed,
                            c.target_keys[k], t);
          }
          ++res.respread_events;
        }
      }
    }

    std::vector<pf::Particle> step_est;
    step_est.reserve(K);
    for (int k = 0; k < K; ++k) {
      step_est.push_back(pf::estimate(targets[k]));
      diag.ess.push_back(pf::ess(targets[k]));
    }
    res.estimates.push_back(std::move(step_est));

    for (int k = 0; k < K; ++k) {
      const bool do_resample =
          c.resample_mode == pf::ResampleMode::kEveryStep ||
          pf::ess(targets[k]) < c.ess_fraction * c.num_particles;
      if (do_resample && t > 0) {
        Rng rng = make_rng(c.seed, {stream::kResample, c.target_keys[k],
                                    static_cast<std::uint64_t>(t)});
        pf::systematic_resample(targets[k], rng);
      }
    }
    res.diagnostics.push_back(std::move(diag));
  }
  return res;
}

}  // namespace gptrack::mtt
