#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mirrormdp/mdp.hpp"

namespace mirrormdp {

/// Empirical transition model: per-pair visit counts over n i.i.d. draws.
/// Rows are exact rationals count/n, so each sums to exactly one.
class EmpiricalModel {
 public:
  EmpiricalModel(std::vector<std::vector<std::int64_t>> counts, std::int64_t samples_per_pair);

  std::int64_t samples_per_pair() const { return n_; }
  int num_pairs() const { return static_cast<int>(counts_.size()); }
  int num_states() const { return counts_.empty() ? 0 : static_cast<int>(counts_[0].size()); }
  const std::vector<std::vector<std::int64_t>>& counts() const { return counts_; }

  Eigen::VectorXd row(int pair) const;
  Eigen::MatrixXd probabilities() const;

 private:
  std::vector<std::vector<std::int64_t>> counts_;
  std::int64_t n_;
};

/// ceil((8d + 4 log(1/sigma')) / delta'^2): samples for an l1-accurate
/// categorical estimate, ||s - s_hat||_1 <= delta' w.p. >= 1 - sigma'.
std::int64_t required_samples_l1(int d, double sigma_prime, double delta_l1);

/// Per-pair sample count making |<P_a - P~_a, h>| <= delta' hold for all
/// pairs simultaneously and all h with ||h||_inf <= box_radius, w.p.
/// >= 1 - sigma' (Hoelder with the explicit box radius, union bound over
/// pairs).
std::int64_t required_samples_constraint(int num_states, int a_tot, double sigma_prime,
                                         double delta_prime, double box_radius);

/// n_per_pair categorical draws per state-action pair from the generative
/// model. Pair p uses the stream derive_stream(seed, p), so estimation order
/// (or fan-out across threads with parallel=true) cannot change any row.
EmpiricalModel estimate_model(const GenerativeModel& gen, std::int64_t n_per_pair,
                              std::uint64_t seed, bool parallel = false);

std::string empirical_model_to_json(const EmpiricalModel& model);
EmpiricalModel empirical_model_from_json(const std::string& text);

}  // namespace mirrormdp
