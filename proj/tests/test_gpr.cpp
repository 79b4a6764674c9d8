#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gptrack/gpr.hpp"
#include "test_util.hpp"

using namespace gptrack;
using namespace gptrack::gpr;

namespace {

/// Random regression instance with smooth structure.
void random_instance(Rng& rng, int n, int d, Eigen::MatrixXd& x,
                     Eigen::VectorXd& y) {
  std::uniform_real_distribution<double> ux(-3.0, 3.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  x.resize(n, d);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = ux(rng);
    y[i] = std::sin(x(i, 0)) + (d > 1 ? 0.5 * std::cos(x(i, 1)) : 0.0) +
           noise(rng);
  }
}

}  // namespace

TEST_CASE("kernel: frozen value at a squared distance of 2 l^2") {
  Hyperparameters hp{2.0, 3.0, 0.0};
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 2.0, 2.0;  // |a-b|^2 = 8 = 2 * l^2
  CHECK(kernel(a, b, hp) ==
        doctest::Approx(3.0 * 0.36787944117144233).epsilon(1e-15));
  CHECK(kernel(a, a, hp) == 3.0);
}

TEST_CASE("kernel_matrix: symmetry and unit diagonal scaling") {
  Rng rng(1);
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  random_instance(rng, 12, 2, x, y);
  Hyperparameters hp{0.7, 2.5, 0.0};
  const Eigen::MatrixXd k = kernel_matrix(x, x, hp);
  REQUIRE(k.rows() == 12);
  REQUIRE(k.cols() == 12);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 12; ++i) CHECK(k(i, i) == 2.5);
  // Cross matrix against a different set.
  Eigen::MatrixXd q;
  Eigen::VectorXd dummy;
  random_instance(rng, 5, 2, q, dummy);
  const Eigen::MatrixXd kc = kernel_matrix(x, q, hp);
  CHECK(kc.rows() == 12);
  CHECK(kc.cols() == 5);
  CHECK(kc(3, 2) == doctest::Approx(kernel(x.row(3), q.row(2), hp)).epsilon(1e-15));
}

TEST_CASE("fit/predict: agreement with the dense-solve oracle") {
  Rng rng(7);
  std::uniform_real_distribution<double> uq(-3.0, 3.0);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 5 + static_cast<int>(rng() % 40);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    random_instance(rng, n, 2, x, y);
    Hyperparameters hp{0.5 + 0.1 * (rep % 7), 1.0 + 0.3 * (rep % 5), 0.05};

    const GpModel m = fit(x, y, hp);
    const testutil::GpOracle oracle = testutil::gp_oracle_fit(x, y, hp);
    for (int q = 0; q < 10; ++q) {
      Eigen::VectorXd xq(2);
      xq << uq(rng), uq(rng);
      const Prediction p = predict(m, xq);
      double om, ov;
      testutil::gp_oracle_predict(oracle, xq, om, ov);
      CHECK(std::abs(p.mean - om) <= 1e-8);
      CHECK(std::abs(p.var - std::max(ov, 0.0)) <= 1e-8);
    }
  }
}

TEST_CASE("predict: noiseless interpolation at the training inputs") {
  Rng rng(3);
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  random_instance(rng, 20, 2, x, y);
  Hyperparameters hp{1.0, 2.0, 0.0};
  const GpModel m = fit(x, y, hp);
  for (int i = 0; i < 20; ++i) {
    const Prediction p = predict(m, x.row(i));
    CHECK(std::abs(p.mean - y[i]) < 1e-6);
    CHECK(p.var >= 0.0);
    CHECK(p.var < 1e-6);
  }
}

TEST_CASE("predict: latent-function variance far from the data") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 0, 1, 0, 0, 1;
  Eigen::VectorXd y(3);
  y << 1.0, -1.0, 0.5;
  Hyperparameters hp{0.5, 4.0, 2.0};
  const GpModel m = fit(x, y, hp);
  Eigen::VectorXd far(2);
  far << 100.0, 100.0;
  const Prediction p = predict(m, far);
  CHECK(p.mean == doctest::Approx(0.0));
  // The reported variance is the latent one: it tops out at signal_var and
  // never includes the observation noise.
  CHECK(p.var == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("predict_batch matches per-query predict") {
  Rng rng(9);
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  random_instance(rng, 30, 2, x, y);
  Hyperparameters hp{0.8, 1.5, 0.1};
  const GpModel m = fit(x, y, hp);

  Eigen::MatrixXd queries;
  Eigen::VectorXd dummy;
  random_instance(rng, 40, 2, queries, dummy);
  Eigen::VectorXd means, vars;
  predict_batch(m, queries, means, vars);
  REQUIRE(means.size() == 40);
  REQUIRE(vars.size() == 40);
  for (int q = 0; q < 40; ++q) {
    const Prediction p = predict(m, queries.row(q));
    CHECK(means[q] == doctest::Approx(p.mean).epsilon(1e-13));
    CHECK(vars[q] == doctest::Approx(p.var).epsilon(1e-13));
  }
}

TEST_CASE("log_marginal_likelihood: closed form for one point and oracle for many") {
  // One observation: LML = -y^2 / (2 s) - log(s) / 2 - log(2 pi) / 2 with
  // s = signal_var + noise_var.
  Eigen::MatrixXd x1(1, 2);
  x1 << 0.3, -0.2;
  Eigen::VectorXd y1(1);
  y1 << 1.7;
  Hyperparameters hp{1.0, 2.0, 0.5};
  const GpModel m1 = fit(x1, y1, hp);
  const double s = 2.5;
  const double expected =
      -0.5 * 1.7 * 1.7 / s - 0.5 * std::log(s) - 0.9189385332046727;
  CHECK(log_marginal_likelihood(m1) == doctest::Approx(expected).epsilon(1e-12));

  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    random_instance(rng, 15 + rep, 2, x, y);
    Hyperparameters h{0.6 + 0.1 * rep, 1.2, 0.2};
    const GpModel m = fit(x, y, h);
    CHECK(log_marginal_likelihood(m) ==
          doctest::Approx(testutil::gp_oracle_lml(x, y, h)).epsilon(1e-9));
  }
}

TEST_CASE("fit: jitter stabilizes duplicate inputs and is recorded") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 1, 1, 1, 1, 1, 2, 2;  // three identical rows
  Eigen::VectorXd y(4);
  y << 0.5, 0.5, 0.5, -1.0;
  Hyperparameters hp{1.0, 1.0, 0.0};  // singular without jitter
  const GpModel m = fit(x, y, hp);
  CHECK(m.jitter > 0.0);
  CHECK(m.jitter <= 1e-3 * hp.signal_var);
  const Prediction p = predict(m, x.row(0));
  CHECK(std::abs(p.mean - 0.5) < 1e-3);
}

TEST_CASE("fit: clean factorizations record zero jitter") {
  Rng rng(21);
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  random_instance(rng, 15, 2, x, y);
  const GpModel m = fit(x, y, Hyperparameters{1.0, 1.0, 0.5});
  CHECK(m.jitter == 0.0);
}

TEST_CASE("default_grid: 8x8 log-spaced with frozen endpoints") {
  const HyperparameterGrid g = default_grid(0.25);
  REQUIRE(g.length_scales.size() == 8);
  REQUIRE(g.signal_vars.size() == 8);
  CHECK(g.noise_var == 0.25);
  CHECK(g.length_scales.front() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(g.length_scales.back() == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(g.signal_vars.front() == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(g.signal_vars.back() == doctest::Approx(1e4).epsilon(1e-12));
  // Uniform ratios in log space.
  for (int i = 0; i + 1 < 8; ++i) {
    CHECK(g.length_scales[i + 1] / g.length_scales[i] ==
          doctest::Approx(std::pow(1000.0, 1.0 / 7.0)).epsilon(1e-10));
    CHECK(g.signal_vars[i + 1] / g.signal_vars[i] ==
          doctest::Approx(std::pow(1e6, 1.0 / 7.0)).epsilon(1e-10));
  }
  // A specific interior value, frozen.
  CHECK(g.length_scales[1] == doctest::Approx(0.26826957952797248).epsilon(1e-12));
}

TEST_CASE("select_hyperparameters: returns the grid's marginal-likelihood argmax") {
  Rng rng(13);
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  random_instance(rng, 25, 2, x, y);

  HyperparameterGrid grid;
  grid.length_scales = {0.3, 1.0, 3.0};
  grid.signal_vars = {0.5, 1.5, 4.0};
  grid.noise_var = 0.05;
  const GpModel best = select_hyperparameters(x, y, grid);

  // Exhaustive re-scan in the documented order (length scale outer); the
  // first maximizer must be the one selected.
  double best_lml = -std::numeric_limits<double>::infinity();
  Hyperparameters best_hp;
  for (double l : grid.length_scales)
    for (double sv : grid.signal_vars) {
      const GpModel m = fit(x, y, Hyperparameters{l, sv, grid.noise_var});
      const double lml = log_marginal_likelihood(m);
      if (lml > best_lml) {
        best_lml = lml;
        best_hp = m.hp;
      }
    }
  CHECK(best.hp.length_scale == best_hp.length_scale);
  CHECK(best.hp.signal_var == best_hp.signal_var);
  CHECK(best.hp.noise_var == grid.noise_var);
  CHECK(log_marginal_likelihood(best) == doctest::Approx(best_lml).epsilon(1e-12));
}

TEST_CASE("select_hyperparameters: ties break toward the earlier grid point") {
  // A single observation y = 0 gives LML = -log(sv + nv)/2 - log(2 pi)/2,
  // which depends on the length scale not at all: every row of the grid
  // ties, so the first length scale must win.
  Eigen::MatrixXd x(1, 2);
  x << 0.0, 0.0;
  Eigen::VectorXd y(1);
  y << 0.0;
  HyperparameterGrid grid;
  grid.length_scales = {0.5, 5.0, 50.0};
  grid.signal_vars = {1.0, 2.0};
  grid.noise_var = 0.1;
  const GpModel m = select_hyperparameters(x, y, grid);
  CHECK(m.hp.length_scale == 0.5);
  CHECK(m.hp.signal_var == 1.0);  // smaller sv has the larger LML here
}

TEST_CASE("fit: input validation") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 0, 1, 0, 0, 1;
  Eigen::VectorXd y(2);
  y << 1, 2;
  CHECK_THROWS_AS(fit(x, y, Hyperparameters{}), DataError);  // length mismatch
  Eigen::VectorXd y3(3);
  y3 << 1, 2, 3;
  CHECK_THROWS_AS(fit(x, y3, Hyperparameters{-1.0, 1.0, 0.1}), ConfigError);
  CHECK_THROWS_AS(fit(x, y3, Hyperparameters{1.0, -1.0, 0.1}), ConfigError);
  CHECK_THROWS_AS(fit(x, y3, Hyperparameters{1.0, 1.0, -0.1}), ConfigError);
}
