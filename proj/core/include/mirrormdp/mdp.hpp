#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mirrormdp/rng.hpp"

namespace mirrormdp {

/// Row-major so that per-pair transition rows are contiguous and can be
/// handed to the samplers as spans.
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tabular MDP. Rows of `transitions` are indexed by global state-action pair
/// id; `state_pairs[i]` lists the pair ids available in state i, in order.
/// Rewards live in [0,1] per pair.
class Mdp {
 public:
  Mdp(int num_states, std::vector<std::vector<int>> state_pairs, Eigen::MatrixXd transitions,
      Eigen::VectorXd rewards);

  int num_states() const { return num_states_; }
  int num_pairs() const { return static_cast<int>(transitions_.rows()); }
  const std::vector<int>& actions(int state) const { return state_pairs_.at(static_cast<std::size_t>(state)); }
  const std::vector<std::vector<int>>& state_pairs() const { return state_pairs_; }
  int pair_state(int pair) const { return pair_state_.at(static_cast<std::size_t>(pair)); }
  const RowMajorMatrix& transitions() const { return transitions_; }
  RowMajorMatrix::ConstRowXpr row(int pair) const { return transitions_.row(pair); }
  const Eigen::VectorXd& rewards() const { return rewards_; }
  double reward(int pair) const { return rewards_[pair]; }

 private:
  int num_states_;
  std::vector<std::vector<int>> state_pairs_;
  std::vector<int> pair_state_;
  RowMajorMatrix transitions_;  // num_pairs x num_states
  Eigen::VectorXd rewards_;
};

/// Per-state distribution over that state's actions, aligned with
/// Mdp::actions(state).
struct Policy {
  std::vector<std::vector<double>> probs;

  static Policy deterministic(const Mdp& mdp, const std::vector<int>& local_action);
  static Policy uniform(const Mdp& mdp);
  void validate(const Mdp& mdp) const;
};

/// Sampling access to the true transition kernel: draws the next state for a
/// queried pair from the row's categorical distribution.
class GenerativeModel {
 public:
  explicit GenerativeModel(const Mdp& mdp) : mdp_(&mdp) {}
  int sample_next_state(int pair, Rng& rng) const;
  const Mdp& mdp() const { return *mdp_; }

 private:
  const Mdp* mdp_;
};

/// P_pi[i,j] = sum_a pi(a|i) p_ij(a); r_pi[i] = sum_a pi(a|i) r_(i,a).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> induced_chain(const Mdp& mdp, const Policy& pi);

/// Unique stationary distribution nu of a row-stochastic matrix, by a dense
/// least-squares solve of [P^T - I; 1^T] nu = [0; 1] with a Cesaro power
/// iteration fallback. Throws if no distribution meets the residual tolerance
/// or the system is rank-deficient (non-unique chain).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p_pi, double tol = 1e-10);

/// <nu_pi, r_pi> for the chain induced by pi.
double policy_value(const Mdp& mdp, const Policy& pi);

struct RviResult {
  double gain = 0.0;       // v*
  Eigen::VectorXd bias;    // h, Bellman-consistent with gain up to tol
  Policy greedy;
  std::int64_t iterations = 0;
};

/// Relative value iteration with the aperiodicity transform P' = (I+P)/2.
/// Returns the optimal gain with Bellman residual
/// max_i |v* + h_i - max_a(r + P h)_i| <= tol and the greedy policy.
RviResult optimal_gain_rvi(const Mdp& mdp, double tol = 1e-8, std::int64_t max_iters = 1000000);

/// Smallest t >= 1 with max over basis starts of ||(P^T)^t e_i - nu||_1 <= 1/2
/// (the max over the simplex is attained at a vertex). nullopt if no t
/// <= t_max qualifies.
std::optional<std::int64_t> mixing_time_exact(const Eigen::MatrixXd& p_pi,
                                              std::int64_t t_max = 100000);

/// Max of mixing_time_exact over policies drawn per-state uniformly from the
/// simplex (Dirichlet(1,...,1)), one derived stream per policy index. Throws
/// if any sampled policy fails to mix within t_max.
std::int64_t estimate_mixing_time(const Mdp& mdp, int num_policies, std::int64_t t_max,
                                  std::uint64_t seed);

/// JSON schema: {"num_states": n, "states": [{"actions": [{"reward": r,
/// "row": [p...]}, ...]}, ...]}.
std::string mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const std::string& text);
Mdp load_mdp_file(const std::string& path);

std::string policy_to_json(const Mdp& mdp, const Policy& pi);
Policy policy_from_json(const Mdp& mdp, const std::string& text);
Policy load_policy_file(const Mdp& mdp, const std::string& path);

}  // namespace mirrormdp
