#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mirrormdp/geometry.hpp"
#include "mirrormdp/mdp.hpp"
#include "mirrormdp/model.hpp"
#include "mirrormdp/solver.hpp"

namespace mirrormdp {

/// The average-reward MDP written as a box-constrained program over
/// (v_bar, h): minimize v_bar subject to
///   g^(i,a)(v_bar, h) = r_(i,a) - v_bar + <P_(i,a), h> - h_i <= 0.
/// Constraint values use the empirical rows; constraint subgradients sample
/// the true kernel through the generative model.
class AmdpProgram {
 public:
  AmdpProgram(const Mdp& mdp, EmpiricalModel model, double t_mix_bound);

  const Mdp& mdp() const { return *mdp_; }
  const EmpiricalModel& model() const { return model_; }
  const Eigen::MatrixXd& p_tilde() const { return p_tilde_; }
  double t_mix_bound() const { return t_mix_bound_; }

  double radius() const { return 2.0 * t_mix_bound_; }       // R
  double box_radius() const { return 2.0 * radius(); }       // h lives in [-2R, 2R]
  double lipschitz() const { return 2.0; }                   // M
  double theta_bar_sq() const {
    const double r4 = 4.0 * radius();
    return r4 * r4 * mdp_->num_states() + 1.0;
  }

  /// X = [0,1] x [-2R, 2R]^|S| as a box geometry (coordinate 0 is v_bar).
  ProxGeometry geometry() const;

 private:
  const Mdp* mdp_;
  EmpiricalModel model_;
  Eigen::MatrixXd p_tilde_;
  double t_mix_bound_;
};

struct PrimalPoint {
  double v_bar = 0.0;
  Eigen::VectorXd h;
};

/// mu_hat per pair (normalized non-productive counts) and the per-state
/// block sums lambda.
struct DualEstimate {
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd lambda;

  static DualEstimate from_counts(const Mdp& mdp, const std::vector<std::int64_t>& counts,
                                  std::int64_t productive_count);
};

/// g^(i,a)_delta at (v_bar, h), evaluated against the empirical row.
double constraint_value(const AmdpProgram& program, int pair, const PrimalPoint& point);

/// Actual coordinate deltas applied by one mirror step, after box clamping.
struct StepDeltas {
  double dv = 0.0;  // v_bar delta
  double ds = 0.0;  // h[s] delta (non-productive only)
  double di = 0.0;  // h[i] delta (non-productive only)
  bool clamped = false;
};

/// Productive step: v_bar <- clamp(v_bar - eta), h unchanged.
StepDeltas apply_productive_step(double& v_bar, double eta);

/// Non-productive step on pair with state i and sampled next state s:
/// v_bar <- clamp(v_bar + eta), h <- clamp(h - eta (e_s - e_i)).
StepDeltas apply_nonproductive_step(double& v_bar, Eigen::VectorXd& h, int i, int s, double eta,
                                    double box_radius);

/// Cache delta for pair j under a non-productive step, Eq.-exact O(1) form:
/// -dv + P~_js*ds + P~_ji*di - 1{state(j)=s}*ds - 1{state(j)=i}*di.
/// With the canonical deltas (dv, ds, di) = (eta, -eta, eta) this reduces to
/// -eta (1 + P~_js - P~_ji + 1{j=i} - 1{j=s}).
double cache_delta_nonproductive(double dv, int i, double di, int s, double ds, int j_state,
                                 double ptilde_js, double ptilde_ji);

/// Per-pair delta-approximate constraint values maintained in O(1) per step.
class ConstraintCache {
 public:
  static ConstraintCache initial(const Mdp& mdp);  // c^0_(j,a) = r_(j,a) = g_delta(0, 0)

  /// Every pair's cache moves by +eta (requires an unclamped step).
  void update_productive(double eta);
  /// Eq.-(14) update with canonical unclamped deltas.
  void update_nonproductive(int i, int s, double eta, const Eigen::MatrixXd& p_tilde,
                            const Mdp& mdp);
  /// Exact-delta correction used when the mirror step clamped at the box.
  void update_productive_deltas(double dv);
  void update_nonproductive_deltas(const StepDeltas& d, int i, int s,
                                   const Eigen::MatrixXd& p_tilde, const Mdp& mdp);

  const Eigen::VectorXd& values() const { return c_; }
  std::int64_t iteration() const { return k_; }

 private:
  Eigen::VectorXd c_;
  std::int64_t k_ = 0;
};

struct AmdpSolveResult {
  PrimalPoint x_hat;  // average of productive iterates
  DualEstimate dual;
  std::int64_t productive_count = 0;
  std::int64_t nonproductive_count = 0;
  std::vector<TraceRecord> trace;  // chosen_constraint carries the pair id
};

/// Derived solve parameters: eps_tilde = delta = epsilon/16 and stepsize
/// eta = eps_tilde/4 = epsilon/64 unless cfg.eta overrides.
struct AmdpStepPlan {
  double eps_tilde;
  double delta;
  double eta;
  double threshold() const { return eps_tilde + delta; }

  static AmdpStepPlan from_config(const SolverConfig& cfg);
};

/// Sequential reference of the head/worker algorithm: starts at (0, 0),
/// keeps per-pair caches incrementally, samples the true kernel with one
/// derived stream per pair, and reconstructs mu_hat from non-productive
/// counts. Throws NoProductiveStepsError when |I| = 0.
AmdpSolveResult solve(const AmdpProgram& program, const SolverConfig& cfg);

/// pi(a|i) = mu_hat_(i,a) / lambda_i; uniform over the state's actions when
/// lambda_i = 0.
Policy round_policy(const DualEstimate& dual, const Mdp& mdp);

/// Theorem-2 iteration bound for this program (kappa = 1, Euclidean).
std::int64_t theoretical_iterations(const AmdpProgram& program, double sigma, double epsilon);

}  // namespace mirrormdp
