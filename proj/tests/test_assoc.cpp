#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gptrack/assoc.hpp"
#include "test_util.hpp"

using namespace gptrack;
using namespace gptrack::assoc;

namespace {

AssociationFactors make_factors(const Eigen::MatrixXd& psi) {
  AssociationFactors f;
  f.psi = psi;
  return f;
}

Eigen::MatrixXd random_psi(Rng& rng, int num_targets, int num_meas) {
  std::uniform_real_distribution<double> u(0.05, 4.0);
  Eigen::MatrixXd psi(num_targets, num_meas + 1);
  psi.col(0).setOnes();
  for (int k = 0; k < num_targets; ++k)
    for (int j = 1; j <= num_meas; ++j) psi(k, j) = u(rng);
  return psi;
}

}  // namespace

TEST_CASE("compute_factors: shape, hand value, and the clutter-rate floor") {
  pf::ParticleSet ps = pf::ParticleSet::zeros(2);
  ps.xi << 0.0, 0.0;
  ps.eta << 100.0, 102.0;
  ps.w << 0.75, 0.25;

  kin::MeasurementSet scan;
  scan.t = 0;
  scan.meas.push_back(kin::range_bearing(0.0, 100.0));
  scan.meas.push_back(kin::range_bearing(50.0, 50.0));
  scan.origin = {0, -1};

  const double sigma_r = 5.0, sigma_b = deg2rad(0.5);

  SUBCASE("nominal detection model") {
    const double p_d = 0.9, lambda = 2.0;
    const AssociationFactors f =
        compute_factors({ps}, scan, sigma_r, sigma_b, p_d, lambda);
    REQUIRE(f.num_targets() == 1);
    REQUIRE(f.num_meas() == 2);
    CHECK(f.psi(0, 0) == 1.0);
    const double denom = lambda * (1.0 - p_d);
    double expected = 0.0;
    for (int m = 0; m < 2; ++m)
      expected += ps.w[m] * pf::measurement_likelihood(ps.xi[m], ps.eta[m],
                                                       scan.meas[0], sigma_r,
                                                       sigma_b);
    expected = p_d * expected / denom;
    CHECK(f.psi(0, 1) == doctest::Approx(expected).epsilon(1e-12));
    // The distant measurement is gated to an exact zero.
    CHECK(f.psi(0, 2) == 0.0);
  }

  SUBCASE("p_d = 1 floors the clutter denominator instead of dividing by zero") {
    const AssociationFactors f =
        compute_factors({ps}, scan, sigma_r, sigma_b, 1.0, 2.0);
    CHECK(std::isfinite(f.psi(0, 1)));
    CHECK(f.psi(0, 1) > 1e6);  // near-hard assignment
  }

  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(compute_factors({ps}, scan, sigma_r, sigma_b, 0.0, 1.0),
                    ConfigError);
    CHECK_THROWS_AS(compute_factors({ps}, scan, sigma_r, sigma_b, 0.5, -1.0),
                    ConfigError);
    CHECK_THROWS_AS(compute_factors({ps}, scan, -1.0, sigma_b, 0.5, 1.0),
                    ConfigError);
    pf::ParticleSet dead = pf::ParticleSet::zeros(2);
    dead.xi << 0.0, 0.0;
    dead.eta << 100.0, 102.0;
    dead.w << 0.0, 0.0;
    CHECK_THROWS_AS(compute_factors({dead}, scan, sigma_r, sigma_b, 0.5, 1.0),
                    DegenerateWeightsError);
  }
}

TEST_CASE("run_bp: single-target instances are exact (tree case)") {
  SUBCASE("frozen two-measurement value") {
    Eigen::MatrixXd psi(1, 3);
    psi << 1.0, 2.0, 3.0;  // miss, meas 1, meas 2
    const Marginals m = run_bp(make_factors(psi));
    CHECK(m.converged);
    CHECK(m.target_to_meas(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(m.target_to_meas(0, 1) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(m.target_to_meas(0, 2) == doctest::Approx(3.0 / 6.0).epsilon(1e-12));
  }

  SUBCASE("random instances against the enumeration oracle") {
    Rng rng(41);
    for (int rep = 0; rep < 100; ++rep) {
      const int kt = static_cast<int>(rng() % 6);  // 0..5 measurements
      const Eigen::MatrixXd psi = random_psi(rng, 1, kt);
      const Marginals bp = run_bp(make_factors(psi));
      const Eigen::MatrixXd oracle = testutil::assoc_marginals_oracle(psi);
      CHECK(bp.converged);
      CHECK((bp.target_to_meas - oracle).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("run_bp: disjoint targets factorize exactly") {
  // Target k sees only measurement k: the joint splits into independent
  // pairs, each with posterior psi / (1 + psi).
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(3, 4);
  psi.col(0).setOnes();
  psi(0, 1) = 0.7;
  psi(1, 2) = 2.0;
  psi(2, 3) = 5.0;
  const Marginals m = run_bp(make_factors(psi));
  CHECK(m.converged);
  for (int k = 0; k < 3; ++k) {
    const double s = psi(k, k + 1);
    CHECK(m.target_to_meas(k, k + 1) == doctest::Approx(s / (1 + s)).epsilon(1e-9));
    CHECK(m.target_to_meas(k, 0) == doctest::Approx(1 / (1 + s)).epsilon(1e-9));
  }
}

TEST_CASE("run_bp: loopy instances stay close to the exact marginals") {
  Rng rng(43);
  int bad = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const int k = 2 + static_cast<int>(rng() % 2);   // 2..3 targets
    const int kt = 1 + static_cast<int>(rng() % 3);  // 1..3 measurements
    const Eigen::MatrixXd psi = random_psi(rng, k, kt);
    const Marginals bp = run_bp(make_factors(psi));
    const Marginals exact = exact_marginals_bruteforce(make_factors(psi));
    double worst = 0.0;
    for (int i = 0; i < k; ++i)
      worst = std::max(worst, testutil::tv_distance(bp.target_to_meas.row(i),
                                                    exact.target_to_meas.row(i)));
    if (worst > 0.05) ++bad;
  }
  // The documented accuracy envelope: at most 5% of instances beyond 0.05 TV.
  CHECK(bad <= reps / 20);
}

TEST_CASE("run_bp: rows are stochastic and views are well-formed") {
  Rng rng(45);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd psi = random_psi(rng, 3, 3);
    const Marginals m = run_bp(make_factors(psi));
    for (int k = 0; k < 3; ++k)
      CHECK(m.target_to_meas.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 3; ++j)
      CHECK(m.meas_to_target.row(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((m.target_to_meas.array() >= 0.0).all());
    CHECK((m.meas_to_target.array() >= 0.0).all());
  }
}

TEST_CASE("run_bp: iteration cap reports non-convergence without throwing") {
  Rng rng(47);
  const Eigen::MatrixXd psi = random_psi(rng, 3, 3);
  BpConfig tight;
  tight.max_iter = 1;
  tight.tol = 1e-14;
  const Marginals m = run_bp(make_factors(psi), tight);
  CHECK_FALSE(m.converged);
  CHECK(m.iterations == 1);
  // Output is still a usable distribution.
  for (int k = 0; k < 3; ++k)
    CHECK(m.target_to_meas.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("run_bp: empty scan yields the missed-detection certainty") {
  Eigen::MatrixXd psi(2, 1);
  psi.col(0).setOnes();
  const Marginals m = run_bp(make_factors(psi));
  CHECK(m.converged);
  REQUIRE(m.target_to_meas.rows() == 2);
  REQUIRE(m.target_to_meas.cols() == 1);
  CHECK(m.target_to_meas(0, 0) == 1.0);
  CHECK(m.target_to_meas(1, 0) == 1.0);
  CHECK(m.meas_to_target.rows() == 0);
}

TEST_CASE("run_bp: input validation") {
  Eigen::MatrixXd psi(2, 3);
  psi.setOnes();
  psi(0, 0) = 0.5;  // column 0 must be exactly one
  CHECK_THROWS_AS(run_bp(make_factors(psi)), DataError);
  psi(0, 0) = 1.0;
  psi(1, 2) = -0.1;
  CHECK_THROWS_AS(run_bp(make_factors(psi)), DataError);
}

TEST_CASE("exact_marginals_bruteforce: agreement with an independent enumerator") {
  Rng rng(49);
  for (int rep = 0; rep < 60; ++rep) {
    const int k = 1 + static_cast<int>(rng() % 4);
    const int kt = static_cast<int>(rng() % 5);
    const Eigen::MatrixXd psi = random_psi(rng, k, kt);
    const Marginals lib = exact_marginals_bruteforce(make_factors(psi));
    const Eigen::MatrixXd oracle = testutil::assoc_marginals_oracle(psi);
    CHECK((lib.target_to_meas - oracle).cwiseAbs().maxCoeff() <= 1e-12);

    // The two orientations describe one joint distribution: the event
    // "target k explains measurement kappa" has one probability.
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < kt; ++j)
        CHECK(lib.target_to_meas(i, j + 1) ==
              doctest::Approx(lib.meas_to_target(j, i + 1)).epsilon(1e-12));
  }
  Eigen::MatrixXd big(9, 1);
  big.setOnes();
  CHECK_THROWS_AS(exact_marginals_bruteforce(make_factors(big)), ConfigError);
}
