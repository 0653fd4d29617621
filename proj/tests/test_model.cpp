#include <doctest.h>

#include <cmath>

#include "mirrormdp/environments.hpp"
#include "mirrormdp/model.hpp"

using namespace mirrormdp;

TEST_CASE("required_samples_l1 formula") {
  const double inv_e = std::exp(-1.0);
  CHECK(required_samples_l1(2, inv_e, 1.0) == 20);
  CHECK(required_samples_l1(1, inv_e, 1.0) == 12);
  // Inverse-square scaling in the target accuracy.
  CHECK(required_samples_l1(2, inv_e, 0.5) == 80);
  CHECK_THROWS_AS(required_samples_l1(0, inv_e, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(required_samples_l1(2, 1.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(required_samples_l1(2, inv_e, 0.0), std::invalid_argument);
}

TEST_CASE("required_samples_constraint reduces to the l1 count") {
  const double four_over_e = 4.0 * std::exp(-1.0);
  // H = 1: same count as the l1 lemma at confidence sigma'/A_tot.
  CHECK(required_samples_constraint(2, 4, four_over_e, 1.0, 1.0) ==
        required_samples_l1(2, std::exp(-1.0), 1.0));
  // Doubling the box radius quadruples the count.
  CHECK(required_samples_constraint(2, 4, four_over_e, 1.0, 2.0) ==
        4 * required_samples_constraint(2, 4, four_over_e, 1.0, 1.0));
}

TEST_CASE("required_samples_constraint monotonicity") {
  Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    const int s = 1 + static_cast<int>(rng.next_double() * 20);
    const int a = 1 + static_cast<int>(rng.next_double() * 30);
    const double sig = 0.01 + 0.8 * rng.next_double();
    const double del = 0.01 + rng.next_double();
    const double h = 0.5 + 10.0 * rng.next_double();
    const auto base = required_samples_constraint(s, a, sig, del, h);
    CHECK(required_samples_constraint(s + 1, a, sig, del, h) >= base);
    CHECK(required_samples_constraint(s, a + 1, sig, del, h) >= base);
    CHECK(required_samples_constraint(s, a, sig, del, h * 1.5) >= base);
    CHECK(required_samples_constraint(s, a, sig, del * 1.5, h) <= base);
    CHECK(required_samples_constraint(s, a, sig * 1.1, del, h) <= base);
  }
}

TEST_CASE("estimate_model: degenerate rows are recovered exactly") {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  Eigen::VectorXd r(2);
  r << 0.0, 1.0;
  const Mdp cycle(2, {{0}, {1}}, p, r);
  const GenerativeModel gen(cycle);
  const auto model = estimate_model(gen, 37, /*seed=*/5);
  CHECK(model.row(0)[1] == 1.0);
  CHECK(model.row(1)[0] == 1.0);
  CHECK(model.counts()[0][1] == 37);
}

TEST_CASE("estimate_model: law of large numbers on a fair coin row") {
  Eigen::MatrixXd p2(2, 2);
  p2 << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd r2(2);
  r2 << 0.0, 0.0;
  const Mdp fair(2, {{0}, {1}}, p2, r2);
  const auto model = estimate_model(GenerativeModel(fair), 10000, 9);
  CHECK(std::abs(model.row(0)[0] - 0.5) <= 0.02);  // 4 sigma
}

TEST_CASE("estimate_model is order independent and parallel safe") {
  const Mdp rs = river_swim();
  const GenerativeModel gen(rs);
  const auto sequential = estimate_model(gen, 500, 13, /*parallel=*/false);
  const auto parallel = estimate_model(gen, 500, 13, /*parallel=*/true);
  CHECK(sequential.counts() == parallel.counts());

  // Rows are exact rationals with denominator n.
  for (int a = 0; a < sequential.num_pairs(); ++a) {
    std::int64_t sum = 0;
    for (std::int64_t c : sequential.counts()[static_cast<std::size_t>(a)]) sum += c;
    CHECK(sum == 500);
  }
}

TEST_CASE("l1 concentration on the river swim row, light version") {
  const Mdp rs = river_swim();
  const GenerativeModel gen(rs);
  const auto n = required_samples_l1(6, 0.1, 0.1);
  CHECK(n == 5722);
  int good = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_stream(1000, static_cast<std::uint64_t>(t)));
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(6);
    for (std::int64_t i = 0; i < n; ++i) counts[gen.sample_next_state(5, rng)] += 1.0;
    const Eigen::VectorXd row = counts / static_cast<double>(n);
    if ((row - rs.row(5).transpose()).lpNorm<1>() <= 0.1) ++good;
  }
  CHECK(good >= 36);  // lemma guarantees 90%; the margin is enormous here
}

TEST_CASE("empirical model json round trip") {
  const Mdp rs = river_swim();
  const auto model = estimate_model(GenerativeModel(rs), 100, 3);
  const auto back = empirical_model_from_json(empirical_model_to_json(model));
  CHECK(back.counts() == model.counts());
  CHECK(back.samples_per_pair() == 100);
  CHECK((back.probabilities() - model.probabilities()).norm() == 0.0);
}
