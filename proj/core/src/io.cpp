#include "mirrormdp/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mirrormdp {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string trace_to_csv(const std::vector<TraceRecord>& trace, bool with_timing) {
  std::string out = "iter,productive,chosen_pair,vbar,max_constraint,elapsed_ms\n";
  char buf[160];
  for (const auto& rec : trace) {
    const double ms = with_timing ? static_cast<double>(rec.elapsed.count()) / 1e6 : 0.0;
    std::string chosen = rec.chosen_constraint ? std::to_string(*rec.chosen_constraint) : "";
    std::string vbar = rec.objective_value ? format_double(*rec.objective_value) : "";
    std::snprintf(buf, sizeof(buf), "%lld,%d,%s,%s,%s,%.3f\n",
                  static_cast<long long>(rec.k), rec.productive ? 1 : 0, chosen.c_str(),
                  vbar.c_str(), format_double(rec.max_approx_constraint).c_str(), ms);
    out += buf;
  }
  return out;
}

std::string summary_to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["env"] = s.env;
  j["epsilon"] = s.epsilon;
  j["seed"] = s.seed;
  j["mode"] = s.mode;
  if (s.mode == "parallel") j["workers"] = s.workers;
  j["pre_samples_per_pair"] = s.pre_samples_per_pair;
  j["t_mix_bound"] = s.t_mix_bound;
  j["executed_iterations"] = s.executed_iterations;
  j["theoretical_iterations_primal_dual"] = s.theoretical_iterations;
  j["sigma"] = s.sigma;
  j["productive_count"] = s.productive_count;
  j["nonproductive_count"] = s.nonproductive_count;
  j["v_bar_hat"] = s.v_bar_hat;
  j["v_star"] = s.v_star;
  j["policy_value"] = s.policy_value;
  j["optimality_gap"] = s.optimality_gap;
  j["lambda_sum"] = s.lambda_sum;
  if (s.comm) {
    nlohmann::ordered_json c;
    c["total_messages"] = s.comm->total_messages();
    c["check_messages"] = s.comm->check_messages;
    c["constraint_replies"] = s.comm->constraint_replies;
    c["productive_step_broadcasts"] = s.comm->productive_step_broadcasts;
    c["nonproductive_step_broadcasts"] = s.comm->nonproductive_step_broadcasts;
    c["sample_requests"] = s.comm->sample_requests;
    c["sample_replies"] = s.comm->sample_replies;
    c["shutdown_messages"] = s.comm->shutdown_messages;
    c["state_id_bits"] = s.comm->state_id_bits;
    c["payload_bits_estimate"] = s.comm->payload_bits_estimate();
    j["comm"] = std::move(c);
  }
  if (s.runtime_ms) j["runtime_ms"] = *s.runtime_ms;
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace mirrormdp
