#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mirrormdp/parallel.hpp"
#include "mirrormdp/solver.hpp"

namespace mirrormdp {

/// CSV with header iter,productive,chosen_pair,vbar,max_constraint,elapsed_ms.
/// chosen_pair is empty on productive rows. elapsed_ms is 0.000 unless
/// with_timing is set: wall clock would break the byte-identical-outputs
/// contract for same-seed runs.
std::string trace_to_csv(const std::vector<TraceRecord>& trace, bool with_timing = false);

struct RunSummary {
  std::string env;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string mode;  // "sequential" or "parallel"
  int workers = 0;   // parallel only
  std::int64_t pre_samples_per_pair = 0;
  double t_mix_bound = 0.0;
  std::int64_t executed_iterations = 0;
  std::int64_t theoretical_iterations = 0;  // Theorem-2 bound at (sigma, epsilon)
  double sigma = 0.0;
  std::int64_t productive_count = 0;
  std::int64_t nonproductive_count = 0;
  double v_bar_hat = 0.0;
  double v_star = 0.0;
  double policy_value = 0.0;
  double optimality_gap = 0.0;
  double lambda_sum = 0.0;
  std::optional<CommStats> comm;
  std::optional<double> runtime_ms;  // only with --timing
};

std::string summary_to_json(const RunSummary& summary);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mirrormdp
