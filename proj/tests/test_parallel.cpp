#include <doctest.h>

#include <cmath>

#include "mirrormdp/environments.hpp"
#include "mirrormdp/parallel.hpp"

using namespace mirrormdp;

namespace {

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

}  // namespace

TEST_CASE("worker_handle processes the protocol vocabulary") {
  const Mdp rs = river_swim();
  const AmdpProgram prog(rs, exact_model(rs, 100), 155.0);
  SolverConfig cfg;
  cfg.epsilon = 0.64;  // eta = 0.01
  const auto plan = AmdpStepPlan::from_config(cfg);
  REQUIRE(plan.eta == doctest::Approx(0.01));

  auto w = WorkerState::make(prog, plan, /*pair=*/7, /*master_seed=*/5);
  CHECK(w.cache == rs.reward(7));
  CHECK(w.pair_state == 3);

  SUBCASE("check constraints never mutates") {
    w.cache = 0.2;
    const auto before_k = w.k;
    const auto r1 = worker_handle(w, Message(CheckConstraints{}));
    const auto r2 = worker_handle(w, Message(CheckConstraints{}));
    REQUIRE(r1.has_value());
    const auto& cv = std::get<ConstraintValue>(*r1);
    CHECK(cv.pair == 7);
    CHECK(cv.value == 0.2);
    CHECK(std::get<ConstraintValue>(*r2).value == 0.2);
    CHECK(w.k == before_k);
  }

  SUBCASE("productive step adds eta to the cache") {
    w.cache = 0.2;
    w.v_bar_mirror = 0.5;  // away from the bounds
    const auto reply = worker_handle(w, Message(ProductiveStep{}));
    CHECK(!reply.has_value());
    CHECK(w.cache == doctest::Approx(0.21).epsilon(1e-15));
    CHECK(w.k == 1);
    CHECK(w.v_bar_mirror == doctest::Approx(0.49));
  }

  SUBCASE("non-productive step applies the sparse cache formula") {
    w.cache = 0.2;
    w.v_bar_mirror = 0.5;
    const int i = 1, s = 4;  // pair 7 owns state 3, outside {i, s}
    const double expected =
        w.cache - plan.eta * (1.0 + prog.p_tilde()(7, s) - prog.p_tilde()(7, i));
    worker_handle(w, Message(NonProductiveStep{i, s}));
    CHECK(w.cache == doctest::Approx(expected).epsilon(1e-15));
    CHECK(w.h_mirror[s] == doctest::Approx(-plan.eta));
    CHECK(w.h_mirror[i] == doctest::Approx(plan.eta));
  }

  SUBCASE("sample request draws from the true row of the owned pair") {
    for (int rep = 0; rep < 20; ++rep) {
      const auto reply = worker_handle(w, Message(SampleRequest{7}));
      REQUIRE(reply.has_value());
      const auto& sr = std::get<SampleReply>(*reply);
      CHECK(sr.pair == 7);
      CHECK(rs.row(7)[sr.state] > 0.0);
    }
    CHECK_THROWS_AS(worker_handle(w, Message(SampleRequest{3})), ProtocolError);
  }
}

TEST_CASE("parallel execution is bit-identical to the sequential solve") {
  const Mdp rs = river_swim();
  const AmdpProgram prog(rs, exact_model(rs, 100), 155.0);
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  cfg.iterations = 2000;
  cfg.seed = 7;
  cfg.record_trace = true;

  const auto seq = solve(prog, cfg);
  for (const int workers : {1, 3, 12}) {
    for (const auto sched : {Scheduler::kInline, Scheduler::kThreads}) {
      const auto par = run_parallel(prog, cfg, workers, sched);
      CHECK(trace_equal(par.trace, seq.trace));
      CHECK(par.x_hat.v_bar == seq.x_hat.v_bar);
      CHECK((par.x_hat.h - seq.x_hat.h).norm() == 0.0);
      CHECK((par.dual.mu_hat - seq.dual.mu_hat).norm() == 0.0);
      CHECK(par.productive_count == seq.productive_count);
    }
  }
}

TEST_CASE("comm stats follow the protocol accounting") {
  const Mdp rs = river_swim();
  const AmdpProgram prog(rs, exact_model(rs, 100), 155.0);
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  cfg.iterations = 1500;
  cfg.seed = 2;
  const auto par = run_parallel(prog, cfg, 4, Scheduler::kInline);
  const auto& c = par.comm;
  const std::int64_t a_tot = 12;
  const std::int64_t n = cfg.iterations;

  CHECK(c.iterations == n);
  CHECK(c.productive_iterations == par.productive_count);
  CHECK(c.nonproductive_iterations == par.nonproductive_count);
  CHECK(c.check_messages == a_tot * n);
  CHECK(c.constraint_replies == a_tot * n);
  CHECK(c.productive_step_broadcasts == a_tot * par.productive_count);
  CHECK(c.nonproductive_step_broadcasts == a_tot * par.nonproductive_count);
  // Exactly one request/reply sample exchange per non-productive iteration.
  CHECK(c.sample_requests == par.nonproductive_count);
  CHECK(c.sample_replies == par.nonproductive_count);
  CHECK(c.shutdown_messages == a_tot);
  CHECK(c.state_id_bits == 3);  // ceil(log2 6)

  // Per-iteration totals: productive = 3 A_tot, non-productive adds 2.
  const std::int64_t expected = 3 * a_tot * n + 2 * par.nonproductive_count + a_tot;
  CHECK(c.total_messages() == expected);
  CHECK(c.payload_bits_estimate() ==
        c.total_messages() + 3 * (c.sample_replies + 2 * c.nonproductive_step_broadcasts));
}

TEST_CASE("worker count bounds are enforced") {
  const Mdp rs = river_swim();
  const AmdpProgram prog(rs, exact_model(rs, 100), 155.0);
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  cfg.iterations = 10;
  CHECK_THROWS_AS(run_parallel(prog, cfg, 0), std::invalid_argument);
  CHECK_THROWS_AS(run_parallel(prog, cfg, 13), std::invalid_argument);
}
