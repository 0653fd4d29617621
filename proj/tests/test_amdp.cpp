#include <doctest.h>

#include <cmath>

#include "mirrormdp/amdp.hpp"
#include "mirrormdp/environments.hpp"

using namespace mirrormdp;

namespace {

Mdp one_state(double reward) {
  Eigen::MatrixXd p(1, 1);
  p << 1.0;
  Eigen::VectorXd r(1);
  r << reward;
  return Mdp(1, {{0}}, p, r);
}

// Exact empirical model: counts n * P (valid when n * P is integral).
EmpiricalModel exact_model(const Mdp& mdp, std::int64_t n) {
  std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(mdp.num_pairs()));
  for (int a = 0; a < mdp.num_pairs(); ++a) {
    auto& row = counts[static_cast<std::size_t>(a)];
    row.resize(static_cast<std::size_t>(mdp.num_states()));
    for (int j = 0; j < mdp.num_states(); ++j)
      row[static_cast<std::size_t>(j)] = std::llround(mdp.row(a)[j] * static_cast<double>(n));
  }
  return EmpiricalModel(std::move(counts), n);
}

AmdpProgram river_program(const Mdp& rs, double tmix = 155.0) {
  return AmdpProgram(rs, exact_model(rs, 100), tmix);
}

}  // namespace

TEST_CASE("program geometry and constants") {
  const Mdp rs = river_swim();
  const auto prog = river_program(rs);
  CHECK(prog.radius() == 310.0);
  CHECK(prog.box_radius() == 620.0);
  CHECK(prog.lipschitz() == 2.0);
  CHECK(prog.theta_bar_sq() == doctest::Approx(1240.0 * 1240.0 * 6 + 1));
  const auto geom = prog.geometry();
  CHECK(geom.dimension() == 7);
  CHECK(geom.lower[0] == 0.0);
  CHECK(geom.upper[0] == 1.0);
  CHECK(geom.lower[3] == -620.0);
  CHECK(geom.upper[3] == 620.0);
}

TEST_CASE("constraint_value matches the defining expression") {
  const Mdp flat = one_state(0.0);
  const AmdpProgram zero_r(flat, exact_model(flat, 10), 1.0);
  PrimalPoint pt{1.0, Eigen::VectorXd::Zero(1)};
  CHECK(constraint_value(zero_r, 0, pt) == -1.0);

  const Mdp unit = one_state(1.0);
  const AmdpProgram unit_r(unit, exact_model(unit, 10), 1.0);
  PrimalPoint origin{0.0, Eigen::VectorXd::Zero(1)};
  CHECK(constraint_value(unit_r, 0, origin) == 1.0);

  const Mdp rs = river_swim();
  const auto prog = river_program(rs);
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    PrimalPoint p;
    p.v_bar = rng.next_double();
    p.h = Eigen::VectorXd::NullaryExpr(6, [&](Eigen::Index) { return 4.0 * rng.next_double() - 2.0; });
    // Independent dense dot product.
    double dot = 0.0;
    for (int j = 0; j < 6; ++j) dot += prog.p_tilde()(5, j) * p.h[j];
    const double expected = rs.reward(5) - p.v_bar + dot - p.h[2];
    CHECK(constraint_value(prog, 5, p) == doctest::Approx(expected).epsilon(1e-15));
  }
  CHECK_THROWS_AS(constraint_value(prog, 99, origin), std::out_of_range);
}

TEST_CASE("step application follows the sparse updates") {
  double v = 0.5;
  const auto d = apply_productive_step(v, 0.01);
  CHECK(v == doctest::Approx(0.49).epsilon(1e-15));
  CHECK(d.dv == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(!d.clamped);

  double v0 = 0.0;
  const auto dc = apply_productive_step(v0, 0.01);
  CHECK(v0 == 0.0);  // projection onto the lower bound
  CHECK(dc.dv == 0.0);
  CHECK(dc.clamped);

  // Non-productive: v rises, h moves on exactly {s, i}; s = i cancels.
  Eigen::VectorXd h = Eigen::VectorXd::Zero(4);
  double vb = 0.2;
  const auto dn = apply_nonproductive_step(vb, h, 1, 3, 0.01, 10.0);
  CHECK(vb == doctest::Approx(0.21));
  CHECK(h[3] == doctest::Approx(-0.01));
  CHECK(h[1] == doctest::Approx(0.01));
  CHECK(h[0] == 0.0);
  CHECK(h[2] == 0.0);
  CHECK(dn.ds == doctest::Approx(-0.01));
  CHECK(dn.di == doctest::Approx(0.01));
  // Implied subgradient (-1, e_s - e_i) has norm sqrt(3) <= M = 2.
  CHECK(std::sqrt(1.0 + dn.ds * dn.ds / (0.01 * 0.01) + dn.di * dn.di / (0.01 * 0.01)) ==
        doctest::Approx(std::sqrt(3.0)));

  Eigen::VectorXd h2 = Eigen::VectorXd::Zero(4);
  double vb2 = 0.2;
  const auto dself = apply_nonproductive_step(vb2, h2, 2, 2, 0.01, 10.0);
  CHECK(h2.norm() == 0.0);
  CHECK(dself.ds == 0.0);
  CHECK(dself.di == 0.0);
  CHECK(vb2 == doctest::Approx(0.21));
}

TEST_CASE("productive step equals the mirror step on the objective gradient") {
  const Mdp rs = river_swim();
  const auto prog = river_program(rs);
  const auto geom = prog.geometry();
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd x(7);
    x[0] = rng.next_double();
    for (int j = 1; j < 7; ++j) x[j] = 10.0 * rng.next_double() - 5.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(7);
    grad[0] = 1.0;  // f(v, h) = v
    const double eta = 0.01;
    const auto stepped = mirror_step(x, eta * grad, geom);

    double v = x[0];
    apply_productive_step(v, eta);
    CHECK(stepped[0] == v);
    CHECK((stepped.tail(6) - x.tail(6)).norm() == 0.0);
  }
}

TEST_CASE("cache updates agree with direct recomputation") {
  const Mdp rs = river_swim();
  const auto prog = river_program(rs);

  auto cache = ConstraintCache::initial(rs);
  CHECK(cache.values()[11] == 1.0);  // c0 = r

  cache.update_productive(0.01);
  CHECK(cache.values()[11] == doctest::Approx(1.01).epsilon(1e-15));
  cache.update_productive(0.01);
  CHECK(cache.values()[11] == doctest::Approx(1.02).epsilon(1e-15));
  CHECK(cache.iteration() == 2);

  // Random interleaving tracked against the defining expression.
  PrimalPoint pt{0.0, Eigen::VectorXd::Zero(6)};
  auto tracked = ConstraintCache::initial(rs);
  Rng rng(31);
  const double eta = 0.01;
  for (int k = 0; k < 300; ++k) {
    if (rng.next_double() < 0.4) {
      const auto d = apply_productive_step(pt.v_bar, eta);
      if (d.clamped)
        tracked.update_productive_deltas(d.dv);
      else
        tracked.update_productive(eta);
    } else {
      const int pair = static_cast<int>(rng.next_double() * 12);
      const int i = rs.pair_state(pair);
      const int s = static_cast<int>(rng.next_double() * 6);
      const auto d = apply_nonproductive_step(pt.v_bar, pt.h, i, s, eta, prog.box_radius());
      if (d.clamped)
        tracked.update_nonproductive_deltas(d, i, s, prog.p_tilde(), rs);
      else
        tracked.update_nonproductive(i, s, eta, prog.p_tilde(), rs);
    }
    for (int p = 0; p < 12; ++p)
      CHECK(std::abs(tracked.values()[p] - constraint_value(prog, p, pt)) <= 1e-10);
  }
}

TEST_CASE("cache delta special cases of the non-productive update") {
  // j outside {i, s}: delta = -eta (1 + P~_js - P~_ji).
  const double eta = 0.02, pjs = 0.3, pji = 0.1;
  CHECK(cache_delta_nonproductive(eta, 4, eta, 2, -eta, /*j_state=*/0, pjs, pji) ==
        doctest::Approx(-eta * (1.0 + pjs - pji)).epsilon(1e-15));
  // s = i: every pair moves by exactly -eta.
  CHECK(cache_delta_nonproductive(eta, 3, 0.0, 3, 0.0, 0, pjs, pji) == doctest::Approx(-eta));
  CHECK(cache_delta_nonproductive(eta, 3, 0.0, 3, 0.0, 3, pjs, pji) == doctest::Approx(-eta));
}

TEST_CASE("solve on a single-state chain approaches the reward") {
  const Mdp m = one_state(0.7);
  const AmdpProgram prog(m, exact_model(m, 10), 1.0);
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  cfg.iterations = 20000;
  cfg.seed = 3;
  const auto res = solve(prog, cfg);
  CHECK(std::abs(res.x_hat.v_bar - 0.7) <= 0.05);
  CHECK(res.productive_count + res.nonproductive_count == 20000);
}

TEST_CASE("solve output invariants on river swim") {
  const Mdp rs = river_swim();
  const auto prog = river_program(rs);
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  cfg.iterations = 20000;
  cfg.seed = 11;
  cfg.record_trace = true;
  const auto res = solve(prog, cfg);

  // Iterate average stays in X.
  CHECK(res.x_hat.v_bar >= 0.0);
  CHECK(res.x_hat.v_bar <= 1.0);
  CHECK(res.x_hat.h.lpNorm<Eigen::Infinity>() <= prog.box_radius());

  // mu entries are integer multiples of 1/|I| and block sums match |J|.
  const double i_count = static_cast<double>(res.productive_count);
  double total = 0.0;
  for (int p = 0; p < 12; ++p) {
    const double scaled = res.dual.mu_hat[p] * i_count;
    CHECK(std::abs(scaled - std::llround(scaled)) <= 1e-9);
    total += res.dual.mu_hat[p];
  }
  CHECK(std::abs(total * i_count - static_cast<double>(res.nonproductive_count)) <= 1e-6);
  CHECK(std::abs(res.dual.lambda.sum() - total) <= 1e-12);

  // Trace bookkeeping: counts match flags, nonproductive rows carry a pair.
  std::int64_t prod = 0;
  for (const auto& rec : res.trace) {
    if (rec.productive) {
      ++prod;
      CHECK(!rec.chosen_constraint.has_value());
    } else {
      CHECK(rec.chosen_constraint.has_value());
    }
  }
  CHECK(prod == res.productive_count);
}

TEST_CASE("solve is deterministic per seed") {
  const Mdp rs = river_swim();
  const auto prog = river_program(rs);
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  cfg.iterations = 5000;
  cfg.seed = 21;
  cfg.record_trace = true;
  const auto a = solve(prog, cfg);
  const auto b = solve(prog, cfg);
  CHECK(trace_equal(a.trace, b.trace));
  CHECK(a.x_hat.v_bar == b.x_hat.v_bar);
  CHECK((a.x_hat.h - b.x_hat.h).norm() == 0.0);
  CHECK((a.dual.mu_hat - b.dual.mu_hat).norm() == 0.0);
}

TEST_CASE("round_policy normalizes per-state blocks") {
  const Mdp rs = river_swim();
  DualEstimate d;
  d.mu_hat = Eigen::VectorXd::Zero(12);
  d.mu_hat[1] = 0.25;   // state 0, right
  d.mu_hat[4] = 0.1;    // state 2, left
  d.mu_hat[5] = 0.3;    // state 2, right
  d.lambda = Eigen::VectorXd::Zero(6);
  const Policy pi = round_policy(d, rs);
  pi.validate(rs);
  CHECK(pi.probs[0][1] == 1.0);  // point mass
  CHECK(pi.probs[2][0] == doctest::Approx(0.25));
  CHECK(pi.probs[2][1] == doctest::Approx(0.75));
  CHECK(pi.probs[3][0] == 0.5);  // lambda = 0 falls back to uniform
  CHECK(pi.probs[3][1] == 0.5);
}

TEST_CASE("bellman solution is feasible for the exact-model constraints") {
  const Mdp rs = river_swim();
  const auto res = optimal_gain_rvi(rs, 1e-10);
  const AmdpProgram prog = river_program(rs);  // exact rows: n * P integral at n = 100
  PrimalPoint star;
  star.v_bar = res.gain;
  star.h = res.bias;
  double worst = -1e300;
  for (int p = 0; p < rs.num_pairs(); ++p) worst = std::max(worst, constraint_value(prog, p, star));
  CHECK(worst <= 1e-8);
}

TEST_CASE("step plan derives the published defaults") {
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  const auto plan = AmdpStepPlan::from_config(cfg);
  CHECK(plan.eps_tilde == doctest::Approx(0.003125));
  CHECK(plan.delta == doctest::Approx(0.003125));
  CHECK(plan.eta == doctest::Approx(0.00078125));
  CHECK(plan.threshold() == doctest::Approx(0.00625));

  cfg.eta = 0.01;
  CHECK(AmdpStepPlan::from_config(cfg).eta == 0.01);

  const Mdp rs = river_swim();
  const auto prog = river_program(rs);
  CHECK(theoretical_iterations(prog, 0.1, 0.05) ==
        theoretical_iterations_primal_dual(prog.theta_bar_sq(), 2.0, 0.1, 0.05, 1.0));
}
