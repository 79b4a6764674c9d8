#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gptrack/kinematics.hpp"
#include "gptrack/pf.hpp"

namespace gptrack::assoc {

/// Likelihood-ratio factors for one scan: psi is K x (Kt+1) with column 0
/// the missed-detection hypothesis, fixed to 1. Column kappa+1 compares
/// "measurement kappa came from target k" against "it is clutter".
struct AssociationFactors {
  Eigen::MatrixXd psi;

  int num_targets() const { return static_cast<int>(psi.rows()); }
  int num_meas() const { return static_cast<int>(psi.cols()) - 1; }
};

struct BpConfig {
  int max_iter = 200;
  double tol = 1e-6;       // L-inf message change
  double damping = 0.5;    // engaged when the change sequence oscillates
};

/// Association marginals. target_to_meas is K x (Kt+1), row-stochastic,
/// column 0 = missed; meas_to_target is Kt x (K+1), row-stochastic,
/// column 0 = clutter (diagnostic view).
struct Marginals {
  Eigen::MatrixXd target_to_meas;
  Eigen::MatrixXd meas_to_target;
  bool converged = true;
  int iterations = 0;
};

/// psi_k(kappa) = P_D * sum_m w_m p(y_kappa | x_m) / (lambda_fa * (1 - P_D)),
/// with the denominator floored at 1e-12 (P_D = 1 or lambda_fa = 0 would
/// otherwise divide by zero; ratios then act as hard assignments).
/// Per-row entries below 1e-12 * (row max) are gated to zero.
AssociationFactors compute_factors(const std::vector<pf::ParticleSet>& targets,
                                   const kin::MeasurementSet& scan,
                                   double sigma_r, double sigma_b, double p_d,
                                   double lambda_fa);

/// Loopy BP on the association graph: synchronous sweeps of
/// target-to-measurement then measurement-to-target messages until the
/// largest message change drops below tol. Non-convergence is reported via
/// the flag, not an error.
Marginals run_bp(const AssociationFactors& factors, const BpConfig& cfg = {});

/// Exact marginals by enumerating every joint association event (each
/// measurement to at most one target and vice versa); K, Kt <= 8.
Marginals exact_marginals_bruteforce(const AssociationFactors& factors);

}  // namespace gptrack::assoc
