#pragma once

// Shared helpers and independent reference implementations ("oracles") for
// the unit and acceptance tests. Everything here is deliberately written the
// straightforward-but-slow way and avoids the library's own linear-algebra
// shortcuts, so agreement is meaningful.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "gptrack/gpr.hpp"
#include "gptrack/kinematics.hpp"

namespace testutil {

// --- dense GP oracle --------------------------------------------------------

struct GpOracle {
  Eigen::MatrixXd kinv;     // (K + noise_var I)^-1, fully pivoted
  Eigen::MatrixXd inputs;
  Eigen::VectorXd kinv_y;
  gptrack::gpr::Hyperparameters hp;
};

inline double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const gptrack::gpr::Hyperparameters& hp) {
  return hp.signal_var *
         std::exp(-(a - b).squaredNorm() / (2.0 * hp.length_scale * hp.length_scale));
}

inline GpOracle gp_oracle_fit(const Eigen::MatrixXd& inputs,
                              const Eigen::VectorXd& targets,
                              const gptrack::gpr::Hyperparameters& hp) {
  const int n = static_cast<int>(inputs.rows());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k(i, j) = se_kernel(inputs.row(i), inputs.row(j), hp);
  k.diagonal().array() += hp.noise_var;
  GpOracle o;
  o.kinv = k.fullPivLu().inverse();
  o.inputs = inputs;
  o.kinv_y = o.kinv * targets;
  o.hp = hp;
  return o;
}

inline void gp_oracle_predict(const GpOracle& o, const Eigen::VectorXd& x,
                              double& mean, double& var) {
  const int n = static_cast<int>(o.inputs.rows());
  Eigen::VectorXd kq(n);
  for (int i = 0; i < n; ++i) kq[i] = se_kernel(o.inputs.row(i), x, o.hp);
  mean = kq.dot(o.kinv_y);
  var = o.hp.signal_var - kq.dot(o.kinv * kq);  // latent-function variance
}

/// log marginal likelihood via an eigendecomposition (no Cholesky).
inline double gp_oracle_lml(const Eigen::MatrixXd& inputs,
                            const Eigen::VectorXd& targets,
                            const gptrack::gpr::Hyperparameters& hp) {
  const int n = static_cast<int>(inputs.rows());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k(i, j) = se_kernel(inputs.row(i), inputs.row(j), hp);
  k.diagonal().array() += hp.noise_var;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const Eigen::VectorXd evals = es.eigenvalues();
  const Eigen::VectorXd z = es.eigenvectors().transpose() * targets;
  double quad = 0.0, logdet = 0.0;
  for (int i = 0; i < n; ++i) {
    quad += z[i] * z[i] / evals[i];
    logdet += std::log(evals[i]);
  }
  return -0.5 * quad - 0.5 * logdet -
         0.5 * n * std::log(2.0 * 3.14159265358979323846);
}

// --- curvilinear motion oracle ------------------------------------------------

/// Exact solution of the curvilinear ODE (position by Simpson quadrature over
/// the analytic speed/heading profiles). Assumes the speed floor never
/// engages over [0, dt].
inline gptrack::kin::KinematicState ode_step_oracle(
    const gptrack::kin::KinematicState& s, double dt, int intervals = 20000) {
  auto speed = [&](double t) { return s.v + s.a_t * t; };
  auto heading = [&](double t) {
    if (s.a_n == 0.0) return s.phi;
    if (s.a_t == 0.0) return s.phi + (s.a_n / s.v) * t;
    return s.phi + (s.a_n / s.a_t) * std::log(speed(t) / s.v);
  };
  auto fx = [&](double t) { return speed(t) * std::cos(heading(t)); };
  auto fy = [&](double t) { return speed(t) * std::sin(heading(t)); };
  auto simpson = [&](auto&& f) {
    const int n = intervals;  // even
    const double h = dt / n;
    double acc = f(0.0) + f(dt);
    for (int i = 1; i < n; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  gptrack::kin::KinematicState out = s;
  out.xi += simpson(fx);
  out.eta += simpson(fy);
  out.v = speed(dt);
  out.phi = gptrack::wrap_angle(heading(dt));
  return out;
}

// --- association enumeration oracle -------------------------------------------

/// Exact target-to-measurement association marginals by enumerating every
/// target-oriented association vector a in {0..Kt}^K (0 = missed) that
/// assigns no measurement twice, weighting each by prod_k psi(k, a_k).
inline Eigen::MatrixXd assoc_marginals_oracle(const Eigen::MatrixXd& psi) {
  const int num_targets = static_cast<int>(psi.rows());
  const int num_meas = static_cast<int>(psi.cols()) - 1;
  Eigen::MatrixXd marg = Eigen::MatrixXd::Zero(num_targets, num_meas + 1);
  std::vector<int> a(num_targets, 0);
  double total = 0.0;
  while (true) {
    std::vector<int> used(num_meas + 1, 0);
    bool valid = true;
    double w = 1.0;
    for (int k = 0; k < num_targets; ++k) {
      if (a[k] > 0 && used[a[k]]++) {
        valid = false;
        break;
      }
      w *= psi(k, a[k]);
    }
    if (valid) {
      total += w;
      for (int k = 0; k < num_targets; ++k) marg(k, a[k]) += w;
    }
    int i = 0;
    while (i < num_targets && ++a[i] > num_meas) a[i++] = 0;
    if (i == num_targets) break;
  }
  return marg / total;
}

/// Half the L1 distance between two row-stochastic rows.
inline double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

// --- assignment / set-metric oracles -------------------------------------------

/// Minimum assignment cost by enumerating all injections of the smaller side.
inline double brute_assignment_cost(const Eigen::MatrixXd& cost) {
  const int nr = static_cast<int>(cost.rows());
  const int nc = static_cast<int>(cost.cols());
  const bool rows_small = nr <= nc;
  const int small = rows_small ? nr : nc;
  const int large = rows_small ? nc : nr;
  std::vector<int> perm(large);
  for (int i = 0; i < large; ++i) perm[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < small; ++i)
      c += rows_small ? cost(i, perm[i]) : cost(perm[i], i);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// GOSPA by direct enumeration of every partial injective matching, following
/// the definition: sum of p-th-power distances over matched pairs plus
/// (c^p / alpha) per unmatched point, all to the 1/p.
inline double brute_gospa(const std::vector<Eigen::Vector2d>& xs,
                          const std::vector<Eigen::Vector2d>& ys, double c,
                          double alpha, double p) {
  const int n = static_cast<int>(xs.size());
  const int m = static_cast<int>(ys.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> match(n, -1);
  std::vector<char> used(m, 0);
  auto recurse = [&](auto&& self, int i) -> void {
    if (i == n) {
      double acc = 0.0;
      int pairs = 0;
      for (int k = 0; k < n; ++k)
        if (match[k] >= 0) {
          acc += std::pow((xs[k] - ys[match[k]]).norm(), p);
          ++pairs;
        }
      acc += std::pow(c, p) / alpha * (n + m - 2 * pairs);
      best = std::min(best, acc);
      return;
    }
    self(self, i + 1);  // leave xs[i] unmatched
    for (int j = 0; j < m; ++j)
      if (!used[j]) {
        used[j] = 1;
        match[i] = j;
        self(self, i + 1);
        match[i] = -1;
        used[j] = 0;
      }
  };
  recurse(recurse, 0);
  return std::pow(best, 1.0 / p);
}

// --- filesystem / process helpers ----------------------------------------------

/// Self-deleting temporary directory.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() /
                        "gptrack_test_XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + cmd);
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// Path of the command-line binary under test (exported by the test harness).
inline std::string cli_path() {
  const char* p = std::getenv("GPTRACK_BIN");
  if (!p || !*p)
    throw std::runtime_error("GPTRACK_BIN is not set; run through ctest");
  return p;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace testutil
