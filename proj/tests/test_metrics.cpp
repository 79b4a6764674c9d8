#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gptrack/metrics.hpp"
#include "test_util.hpp"

using namespace gptrack;
using namespace gptrack::metrics;

namespace {

std::vector<Eigen::Vector2d> random_points(Rng& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
  return pts;
}

}  // namespace

TEST_CASE("rmse: frozen value and pooling semantics") {
  std::vector<Eigen::Vector2d> truth = {{0, 0}, {3, 4}};
  std::vector<Eigen::Vector2d> est = {{0, 0}, {0, 0}};
  // Squared errors 0 and 25 pooled over 2 samples.
  CHECK(rmse(truth, est) == doctest::Approx(3.5355339059327378).epsilon(1e-15));

  SquaredErrorAccumulator acc;
  acc.add_pair(truth[0], est[0]);
  acc.add_pair(truth[1], est[1]);
  CHECK(acc.rmse() == doctest::Approx(3.5355339059327378).epsilon(1e-15));
  CHECK(acc.count() == 2);

  // Pooling across runs is a single flat mean, not a mean of per-run RMSEs.
  SquaredErrorAccumulator pooled;
  pooled.add(1.0);  // run 1: one step
  pooled.add(4.0);  // run 2: two steps
  pooled.add(9.0);
  CHECK(pooled.rmse() == doctest::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("rmse: validation") {
  std::vector<Eigen::Vector2d> a = {{0, 0}};
  std::vector<Eigen::Vector2d> b = {{0, 0}, {1, 1}};
  CHECK_THROWS_AS(rmse(a, b), DataError);
  CHECK_THROWS_AS(rmse({}, {}), DataError);
  SquaredErrorAccumulator empty;
  CHECK_THROWS_AS(empty.rmse(), DataError);
}

TEST_CASE("optimal_assignment: hand-checked cases") {
  Eigen::MatrixXd c(2, 2);
  c << 1, 10, 10, 1;
  CHECK(optimal_assignment(c) == std::vector<int>{0, 1});
  c << 10, 1, 1, 10;
  CHECK(optimal_assignment(c) == std::vector<int>{1, 0});

  // Greedy would take (0,0)=0 and pay 100; optimal pays 1 + 2.
  Eigen::MatrixXd g(2, 2);
  g << 0, 1, 2, 100;
  CHECK(optimal_assignment(g) == std::vector<int>{1, 0});

  // Wide: every row assigned, best columns picked.
  Eigen::MatrixXd w(2, 3);
  w << 5, 1, 9, 5, 1, 0;
  const auto aw = optimal_assignment(w);
  CHECK(aw == std::vector<int>{1, 2});

  // Tall: one row left out (-1).
  Eigen::MatrixXd t(3, 2);
  t << 1, 9, 9, 1, 9, 9;
  const auto at = optimal_assignment(t);
  CHECK(at[0] == 0);
  CHECK(at[1] == 1);
  CHECK(at[2] == -1);
}

TEST_CASE("optimal_assignment: matches brute force on random instances") {
  Rng rng(31);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> size(1, 5);
  for (int rep = 0; rep < 100; ++rep) {
    const int nr = size(rng), nc = size(rng);
    Eigen::MatrixXd cost(nr, nc);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) cost(i, j) = u(rng);
    const auto assign = optimal_assignment(cost);
    REQUIRE(static_cast<int>(assign.size()) == nr);
    double total = 0.0;
    std::vector<int> used(nc, 0);
    int assigned = 0;
    for (int i = 0; i < nr; ++i) {
      if (assign[i] < 0) continue;
      CHECK(!used[assign[i]]);
      used[assign[i]] = 1;
      total += cost(i, assign[i]);
      ++assigned;
    }
    CHECK(assigned == std::min(nr, nc));
    CHECK(total == doctest::Approx(testutil::brute_assignment_cost(cost))
                       .epsilon(1e-12));
  }
}

TEST_CASE("gospa: frozen boundary cases") {
  const GospaParams p{10.0, 2.0, 2.0};
  std::vector<Eigen::Vector2d> empty;
  std::vector<Eigen::Vector2d> two = {{0, 0}, {5, 5}};
  CHECK(gospa(empty, empty, p) == 0.0);
  // Each unmatched point costs c^p / alpha = 50; two points -> sqrt(100).
  CHECK(gospa(empty, two, p) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(gospa(two, empty, p) == doctest::Approx(10.0).epsilon(1e-15));

  // A single pair at distance 3: cost sqrt(9).
  std::vector<Eigen::Vector2d> x = {{0, 0}};
  std::vector<Eigen::Vector2d> y = {{3, 0}};
  CHECK(gospa(x, y, p) == doctest::Approx(3.0).epsilon(1e-15));

  // Beyond the cutoff the pair is as bad as two unmatched points.
  std::vector<Eigen::Vector2d> far = {{100, 0}};
  CHECK(gospa(x, far, p) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("gospa: equals enumeration and satisfies metric properties") {
  Rng rng(33);
  std::uniform_int_distribution<int> size(0, 5);
  const GospaParams p{10.0, 2.0, 2.0};
  for (int rep = 0; rep < 60; ++rep) {
    const auto xs = random_points(rng, size(rng), 15.0);
    const auto ys = random_points(rng, size(rng), 15.0);
    const double g = gospa(xs, ys, p);
    const double oracle = testutil::brute_gospa(xs, ys, p.c, p.alpha, p.p);
    CHECK(std::abs(g - oracle) <= 1e-10);

    // Symmetry and identity.
    CHECK(gospa(ys, xs, p) == doctest::Approx(g).epsilon(1e-12));
    CHECK(gospa(xs, xs, p) == 0.0);

    // Monotone in the cutoff.
    const double g_small = gospa(xs, ys, GospaParams{5.0, 2.0, 2.0});
    const double g_large = gospa(xs, ys, GospaParams{20.0, 2.0, 2.0});
    CHECK(g_small <= g + 1e-12);
    CHECK(g <= g_large + 1e-12);
  }
}

TEST_CASE("gospa: triangle inequality on random triples") {
  Rng rng(35);
  std::uniform_int_distribution<int> size(0, 4);
  const GospaParams p{8.0, 2.0, 2.0};
  for (int rep = 0; rep < 40; ++rep) {
    const auto xs = random_points(rng, size(rng), 10.0);
    const auto ys = random_points(rng, size(rng), 10.0);
    const auto zs = random_points(rng, size(rng), 10.0);
    CHECK(gospa(xs, zs, p) <= gospa(xs, ys, p) + gospa(ys, zs, p) + 1e-12);
  }
}

TEST_CASE("gospa: parameter validation") {
  std::vector<Eigen::Vector2d> x = {{0, 0}};
  CHECK_THROWS_AS(gospa(x, x, GospaParams{-1.0, 2.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(gospa(x, x, GospaParams{10.0, 0.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(gospa(x, x, GospaParams{10.0, 2.0, 0.0}), ConfigError);
}
