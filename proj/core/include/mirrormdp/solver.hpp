#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mirrormdp/geometry.hpp"
#include "mirrormdp/rng.hpp"

namespace mirrormdp {

/// Oracle bundle for min f(x) s.t. g^(l)(x) <= 0 over a box, with stochastic
/// subgradients and delta-approximate constraint values.
struct ConstrainedProblem {
  int dim = 0;
  /// Stochastic subgradient of f.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)> objective_grad;
  int constraint_count = 0;
  /// g^(l)_delta(x): the delta-approximate constraint value.
  std::function<double(int, const Eigen::VectorXd&)> constraint_approx_value;
  /// Stochastic subgradient of g^(l).
  std::function<Eigen::VectorXd(int, const Eigen::VectorXd&, Rng&)> constraint_grad;
  double lipschitz = 1.0;    // M, bounds every stochastic subgradient norm
  double approx_level = 0.0; // delta

  // Exact oracles, optional; used by tests and duality_gap_bruteforce.
  std::function<double(const Eigen::VectorXd&)> exact_objective;
  std::function<double(int, const Eigen::VectorXd&)> exact_constraint;
};

struct SolverConfig {
  double epsilon = 0.1;
  std::optional<double> eta;  // defaults to epsilon / M^2 at run time
  std::int64_t iterations = 1000;
  double sigma = 0.1;  // confidence, reporting only
  std::uint64_t seed = 0;
  bool record_trace = false;
};

struct TraceRecord {
  std::int64_t k = 0;
  bool productive = false;
  std::optional<int> chosen_constraint;  // set iff non-productive
  double max_approx_constraint = 0.0;
  std::optional<double> objective_value;  // set iff an exact objective is supplied
  std::optional<int> sampled_state;  // AMDP runs: next state drawn on this step
  std::chrono::nanoseconds elapsed{0};
};

/// Deterministic fields coincide; elapsed is wall clock and excluded.
bool trace_equal(const std::vector<TraceRecord>& a, const std::vector<TraceRecord>& b);

struct SolverOutput {
  Eigen::VectorXd x_hat;       // mean of productive iterates
  Eigen::VectorXd lambda_hat;  // dual estimate, length m
  std::int64_t productive_count = 0;
  std::int64_t nonproductive_count = 0;
  std::vector<TraceRecord> trace;  // empty unless record_trace
};

/// Thrown when no iteration was productive; carries the trace for diagnosis.
class NoProductiveStepsError : public std::runtime_error {
 public:
  explicit NoProductiveStepsError(std::vector<TraceRecord> trace)
      : std::runtime_error("mirror descent made no productive steps"), trace_(std::move(trace)) {}
  const std::vector<TraceRecord>& trace() const { return trace_; }

 private:
  std::vector<TraceRecord> trace_;
};

/// Mirror descent with functional constraints and noisy constraint values.
/// Starts from argmin d; step k is productive when max_l g^(l)_delta(x^k)
/// <= epsilon + delta, otherwise steps on the most violated constraint
/// (lowest index on ties). Returns the average of productive iterates and
/// the dual estimate lambda_hat_l = |{k in J : l(k)=l}| / |I|.
SolverOutput run(const ConstrainedProblem& problem, const ProxGeometry& geom,
                 const SolverConfig& cfg);

/// lambda_hat from a recorded trace. Constraint indices are 0-based.
Eigen::VectorXd estimate_duals(const std::vector<TraceRecord>& trace,
                               std::int64_t productive_count, int m);

/// ceil(280 * Theta0^2 * M^2 * log(1/sigma) / eps^2).
std::int64_t theoretical_iterations_primal(double theta0_sq, double lipschitz, double sigma,
                                           double epsilon);

/// ceil(128 * ThetaBar0^2 * M^2 * (17*log(2/sigma) + 2*kappa) / eps^2).
/// Accepts any sigma in (0,1); the underlying theorem assumes sigma < 1/2, but
/// the formula is evaluated as given.
std::int64_t theoretical_iterations_primal_dual(double theta_bar_sq, double lipschitz,
                                                double sigma, double epsilon, double kappa);

/// Nemirovski constant bound for the dual of an l_p space of dimension d.
/// p in [1,2]: min(d^(2/p-1), max(1, 2e*log d - e)); p in (2,inf]: d^(1-2/p).
double nemirovski_kappa(double p, int d);

/// f(x_hat) - min over a grid of Q of [f(y) + sum_l lambda_l g^(l)(y)], using
/// the exact oracles. Overestimates the true gap by at most
/// M * (1 + sum lambda) * grid diameter. Requires dim <= 3.
double duality_gap_bruteforce(const ConstrainedProblem& problem, const ProxGeometry& geom,
                              const Eigen::VectorXd& x_hat, const Eigen::VectorXd& lambda_hat,
                              double grid_resolution);

}  // namespace mirrormdp
