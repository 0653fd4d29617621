#include <doctest.h>

#include <nlohmann/json.hpp>

#include "mirrormdp/io.hpp"

using namespace mirrormdp;

TEST_CASE("trace csv formatting is deterministic") {
  std::vector<TraceRecord> trace(2);
  trace[0].k = 0;
  trace[0].productive = true;
  trace[0].max_approx_constraint = 0.125;
  trace[0].objective_value = 0.5;
  trace[0].elapsed = std::chrono::nanoseconds(1234567);
  trace[1].k = 1;
  trace[1].productive = false;
  trace[1].chosen_constraint = 7;
  trace[1].max_approx_constraint = 0.25;
  trace[1].objective_value = 0.4375;
  trace[1].elapsed = std::chrono::nanoseconds(2000000);

  const std::string csv = trace_to_csv(trace);
  CHECK(csv ==
        "iter,productive,chosen_pair,vbar,max_constraint,elapsed_ms\n"
        "0,1,,0.5,0.125,0.000\n"
        "1,0,7,0.4375,0.25,0.000\n");

  const std::string timed = trace_to_csv(trace, /*with_timing=*/true);
  CHECK(timed.find("1.235") != std::string::npos);
}

TEST_CASE("summary json carries both executed and theoretical budgets") {
  RunSummary s;
  s.env = "riverswim";
  s.epsilon = 0.05;
  s.seed = 42;
  s.mode = "parallel";
  s.workers = 3;
  s.pre_samples_per_pair = 1000;
  s.t_mix_bound = 155.0;
  s.executed_iterations = 200000;
  s.theoretical_iterations = 123456789;
  s.sigma = 0.1;
  s.productive_count = 99000;
  s.nonproductive_count = 101000;
  s.v_bar_hat = 0.86;
  s.v_star = 0.857;
  s.policy_value = 0.83;
  s.optimality_gap = 0.027;
  s.lambda_sum = 1.02;
  CommStats comm;
  comm.state_id_bits = 3;
  comm.sample_replies = 5;
  s.comm = comm;

  const auto parsed = nlohmann::json::parse(summary_to_json(s));
  CHECK(parsed.at("executed_iterations").get<std::int64_t>() == 200000);
  CHECK(parsed.at("theoretical_iterations_primal_dual").get<std::int64_t>() == 123456789);
  CHECK(parsed.at("mode").get<std::string>() == "parallel");
  CHECK(parsed.at("workers").get<int>() == 3);
  CHECK(parsed.at("comm").at("state_id_bits").get<int>() == 3);
  CHECK(!parsed.contains("runtime_ms"));  // timing is opt-in

  s.runtime_ms = 12.5;
  CHECK(nlohmann::json::parse(summary_to_json(s)).at("runtime_ms").get<double>() == 12.5);
}
