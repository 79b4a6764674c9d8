#include "gptrack/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gptrack::assoc {

namespace {
constexpr double kDenomFloor = 1e-12;
constexpr double kGateFraction = 1e-12;
}  // namespace

AssociationFactors compute_factors(const std::vector<pf::ParticleSet>& targets,
                                   const kin::MeasurementSet& scan,
                                   double sigma_r, double sigma_b, double p_d,
                                   double lambda_fa) {
  if (!(p_d > 0.0 && p_d <= 1.0))
    throw ConfigError("assoc: p_d must lie in (0, 1]");
  if (lambda_fa < 0.0) throw ConfigError("assoc: lambda_fa must be >= 0");
  if (!(sigma_r > 0.0) || !(sigma_b > 0.0))
    throw ConfigError("assoc: measurement noise stds must be positive");

  const int K = static_cast<int>(targets.size());
  const int Kt = static_cast<int>(scan.meas.size());
  AssociationFactors f;
  f.psi.resize(K, Kt + 1);
  f.psi.col(0).setOnes();

  const double denom = std::max(lambda_fa * (1.0 - p_d), kDenomFloor);
  for (int k = 0; k < K; ++k) {
    const pf::ParticleSet& ps = targets[k];
    const double wsum = ps.w.sum();
    if (!(wsum > 0.0))
      throw DegenerateWeightsError("assoc: zero weight vector for target");
    for (int kappa = 0; kappa < Kt; ++kappa) {
      double s = 0.0;
      for (int m = 0; m < ps.size(); ++m)
        s += ps.w[m] * pf::measurement_likelihood(ps.xi[m], ps.eta[m],
                                                  scan.meas[kappa], sigma_r,
                                                  sigma_b);
      f.psi(k, kappa + 1) = p_d * (s / wsum) / denom;
    }
    if (Kt > 0) {
      const double gate = kGateFraction * f.psi.row(k).tail(Kt).maxCoeff();
      for (int kappa = 1; kappa <= Kt; ++kappa)
        if (f.psi(k, kappa) < gate) f.psi(k, kappa) = 0.0;
    }
  }
  return f;
}

Marginals run_bp(const AssociationFactors& factors, const BpConfig& cfg) {
  const int K = factors.num_targets();
  const int Kt = factors.num_meas();
  if ((factors.psi.col(0).array() != 1.0).any())
    throw DataError("assoc: psi column 0 must be 1");
  if ((factors.psi.array() < 0.0).any())
    throw DataError("assoc: psi entries must be non-negative");

  Marginals out;
  // mu(k, kappa): target k -> measurement kappa; ups(kappa, k): reverse.
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(K, std::max(Kt, 1));
  Eigen::MatrixXd ups = Eigen::MatrixXd::Ones(std::max(Kt, 1), K);

  bool damped = false;
  double prev_change = std::numeric_limits<double>::infinity();
  int rising = 0;
  int iters_run = 0;
  bool converged = true;
  if (Kt > 0 && K > 0) {
    converged = false;
    while (iters_run < cfg.max_iter) {
      ++iters_run;
      Eigen::MatrixXd mu_new(K, Kt);
      for (int k = 0; k < K; ++k) {
        double row = 0.0;
        for (int j = 0; j < Kt; ++j) row += factors.psi(k, j + 1) * ups(j, k);
        for (int kappa = 0; kappa < Kt; ++kappa) {
          const double denom =
              1.0 + row - factors.psi(k, kappa + 1) * ups(kappa, k);
          mu_new(k, kappa) = factors.psi(k, kappa + 1) / denom;
        }
      }
      if (damped) mu_new = cfg.damping * mu_new + (1.0 - cfg.damping) * mu;

      Eigen::MatrixXd ups_new(Kt, K);
      for (int kappa = 0; kappa < Kt; ++kappa) {
        double col = 0.0;
        for (int k = 0; k < K; ++k) col += mu_new(k, kappa);
        for (int k = 0; k < K; ++k)
          ups_new(kappa, k) = 1.0 / (1.0 + col - mu_new(k, kappa));
      }
      if (damped) ups_new = cfg.damping * ups_new + (1.0 - cfg.damping) * ups;

      const double change =
          std::max((mu_new - mu).cwiseAbs().maxCoeff(),
                   (ups_new - ups).cwiseAbs().maxCoeff());
      mu = std::move(mu_new);
      ups = std::move(ups_new);
      if (change < cfg.tol) {
        converged = true;
        break;
      }
      // Oscillation guard: engage damping after several non-decreasing
      // change readings.
      rising = (change >= prev_change) ? rising + 1 : 0;
      if (rising >= 5) damped = true;
      prev_change = change;
    }
  }
  out.converged = converged;
  out.iterations = iters_run;

  out.target_to_meas.resize(K, Kt + 1);
  for (int k = 0; k < K; ++k) {
    out.target_to_meas(k, 0) = 1.0;  // psi_k(0) * ups_0 with ups_0 = 1
    for (int kappa = 0; kappa < Kt; ++kappa)
      out.target_to_meas(k, kappa + 1) =
          factors.psi(k, kappa + 1) * ups(kappa, k);
    out.target_to_meas.row(k) /= out.target_to_meas.row(k).sum();
  }

  out.meas_to_target.resize(Kt, K + 1);
  for (int kappa = 0; kappa < Kt; ++kappa) {
    out.meas_to_target(kappa, 0) = 1.0;  // clutter hypothesis
    for (int k = 0; k < K; ++k)
      out.meas_to_target(kappa, k + 1) = mu(k, kappa);
    out.meas_to_target.row(kappa) /= out.meas_to_target.row(kappa).sum();
  }
  return out;
}

namespace {

// Depth-first enumeration over joint association events, accumulating the
// event weight prod_k psi_k(a_k) into the marginal tallies.
struct Enumerator {
  const Eigen::MatrixXd& psi;
  int K, Kt;
  std::vector<int> assign;      // a_k per target; 0 = missed
  Eigen::MatrixXd pa;           // K x (Kt+1)
  Eigen::MatrixXd pb;           // Kt x (K+1)
  double total = 0.0;

  explicit Enumerator(const Eigen::MatrixXd& psi_)
      : psi(psi_),
        K(static_cast<int>(psi_.rows())),
        Kt(static_cast<int>(psi_.cols()) - 1),
        assign(K, 0),
        pa(Eigen::MatrixXd::Zero(K, Kt + 1)),
        pb(Eigen::MatrixXd::Zero(std::max(Kt, 0), K + 1)) {}

  void dfs(int k, unsigned used, double weight) {
    if (weight == 0.0) return;
    if (k == K) {
      total += weight;
      for (int i = 0; i < K; ++i) pa(i, assign[i]) += weight;
      std::vector<int> meas_owner(Kt, 0);
      for (int i = 0; i < K; ++i)
        if (assign[i] > 0) meas_owner[assign[i] - 1] = i + 1;
      for (int j = 0; j < Kt; ++j) pb(j, meas_owner[j]) += weight;
      return;
    }
    assign[k] = 0;
    dfs(k + 1, used, weight);  // psi_k(0) = 1
    for (int kappa = 1; kappa <= Kt; ++kappa) {
      if (used & (1u << (kappa - 1))) continue;
      assign[k] = kappa;
      dfs(k + 1, used | (1u << (kappa - 1)), weight * psi(k, kappa));
    }
    assign[k] = 0;
  }
};

}  // namespace

Marginals exact_marginals_bruteforce(const AssociationFactors& factors) {
  const int K = factors.num_targets();
  const int Kt = factors.num_meas();
  if (K > 8 || Kt > 8)
    throw ConfigError("assoc: enumeration limited to K <= 8, Kt <= 8");
  if ((factors.psi.array() < 0.0).any())
    throw DataError("assoc: psi entries must be non-negative");

  Enumerator e(factors.psi);
  e.dfs(0, 0u, 1.0);
  if (!(e.total > 0.0))
    throw NumericalError("assoc: all enumeration weights vanished");

  Marginals out;
  out.converged = true;
  out.iterations = 0;
  out.target_to_meas = e.pa / e.total;
  out.meas_to_target = e.pb / e.total;
  return out;
}

}  // namespace gptrack::assoc
