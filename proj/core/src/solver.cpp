#include "mirrormdp/solver.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace mirrormdp {

namespace {

void check_gradient_norm([[maybe_unused]] const Eigen::VectorXd& g,
                         [[maybe_unused]] double lipschitz) {
  // (A3): stochastic subgradients stay inside the Lipschitz ball.
  assert(g.norm() <= lipschitz * (1.0 + 1e-9));
}

}  // namespace

bool trace_equal(const std::vector<TraceRecord>& a, const std::vector<TraceRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].k != b[i].k || a[i].productive != b[i].productive ||
        a[i].chosen_constraint != b[i].chosen_constraint ||
        a[i].max_approx_constraint != b[i].max_approx_constraint ||
        a[i].objective_value != b[i].objective_value)
      return false;
  }
  return true;
}

SolverOutput run(const ConstrainedProblem& problem, const ProxGeometry& geom,
                 const SolverConfig& cfg) {
  if (problem.dim != geom.dimension())
    throw std::invalid_argument("run: problem/geometry dimension mismatch");
  if (cfg.iterations < 1) throw std::invalid_argument("run: iterations must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("run: epsilon must be positive");
  const double eta = cfg.eta.value_or(cfg.epsilon / (problem.lipschitz * problem.lipschitz));
  if (!(eta > 0.0)) throw std::invalid_argument("run: stepsize must be positive");

  Rng rng(cfg.seed);
  Eigen::VectorXd x = geom.prox_center();
  Eigen::VectorXd x_sum = Eigen::VectorXd::Zero(problem.dim);
  std::vector<std::int64_t> nonproductive_counts(
      static_cast<std::size_t>(std::max(problem.constraint_count, 0)), 0);
  std::int64_t productive = 0;
  std::int64_t nonproductive = 0;
  std::vector<TraceRecord> trace;
  if (cfg.record_trace) trace.reserve(static_cast<std::size_t>(cfg.iterations));
  const auto t0 = std::chrono::steady_clock::now();

  const double threshold = cfg.epsilon + problem.approx_level;
  for (std::int64_t k = 0; k < cfg.iterations; ++k) {
    double max_g = -std::numeric_limits<double>::infinity();
    int argmax = -1;
    for (int l = 0; l < problem.constraint_count; ++l) {
      const double g = problem.constraint_approx_value(l, x);
      if (g > max_g) {  // strict: lowest index wins ties
        max_g = g;
        argmax = l;
      }
    }
    const bool is_productive = problem.constraint_count == 0 || max_g <= threshold;

    TraceRecord rec;
    if (cfg.record_trace) {
      rec.k = k;
      rec.productive = is_productive;
      rec.max_approx_constraint = problem.constraint_count == 0 ? 0.0 : max_g;
      if (problem.exact_objective) rec.objective_value = problem.exact_objective(x);
    }

    if (is_productive) {
      x_sum += x;
      ++productive;
      Eigen::VectorXd g = problem.objective_grad(x, rng);
      check_gradient_norm(g, problem.lipschitz);
      x = mirror_step(x, eta * g, geom);
    } else {
      ++nonproductive;
      ++nonproductive_counts[static_cast<std::size_t>(argmax)];
      if (cfg.record_trace) rec.chosen_constraint = argmax;
      Eigen::VectorXd g = problem.constraint_grad(argmax, x, rng);
      check_gradient_norm(g, problem.lipschitz);
      x = mirror_step(x, eta * g, geom);
    }
    if (cfg.record_trace) {
      rec.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now() - t0);
      trace.push_back(rec);
    }
  }

  if (productive == 0) throw NoProductiveStepsError(std::move(trace));

  SolverOutput out;
  out.x_hat = x_sum / static_cast<double>(productive);
  out.lambda_hat = Eigen::VectorXd::Zero(problem.constraint_count);
  for (int l = 0; l < problem.constraint_count; ++l)
    out.lambda_hat[l] =
        static_cast<double>(nonproductive_counts[static_cast<std::size_t>(l)]) /
        static_cast<double>(productive);
  out.productive_count = productive;
  out.nonproductive_count = nonproductive;
  out.trace = std::move(trace);
  return out;
}

Eigen::VectorXd estimate_duals(const std::vector<TraceRecord>& trace,
                               std::int64_t productive_count, int m) {
  if (productive_count < 1)
    throw std::invalid_argument("estimate_duals: productive_count must be >= 1");
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  for (const auto& rec : trace) {
    if (!rec.productive && rec.chosen_constraint) {
      const int l = *rec.chosen_constraint;
      if (l < 0 || l >= m) throw std::out_of_range("estimate_duals: constraint index");
      lambda[l] += 1.0;
    }
  }
  return lambda / static_cast<double>(productive_count);
}

std::int64_t theoretical_iterations_primal(double theta0_sq, double lipschitz, double sigma,
                                           double epsilon) {
  if (theta0_sq < 0.0) throw std::invalid_argument("theta0_sq must be nonnegative");
  if (!(lipschitz > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("lipschitz and epsilon must be positive");
  if (!(sigma > 0.0) || sigma >= 1.0) throw std::invalid_argument("sigma must lie in (0,1)");
  const double n =
      280.0 * theta0_sq * lipschitz * lipschitz * std::log(1.0 / sigma) / (epsilon * epsilon);
  return static_cast<std::int64_t>(std::ceil(n));
}

std::int64_t theoretical_iterations_primal_dual(double theta_bar_sq, double lipschitz,
                                                double sigma, double epsilon, double kappa) {
  if (theta_bar_sq < 0.0) throw std::invalid_argument("theta_bar_sq must be nonnegative");
  if (!(lipschitz > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("lipschitz and epsilon must be positive");
  if (kappa < 0.0) throw std::invalid_argument("kappa must be nonnegative");
  if (!(sigma > 0.0) || sigma >= 1.0) throw std::invalid_argument("sigma must lie in (0,1)");
  const double n = 128.0 * theta_bar_sq * lipschitz * lipschitz *
                   (17.0 * std::log(2.0 / sigma) + 2.0 * kappa) / (epsilon * epsilon);
  return static_cast<std::int64_t>(std::ceil(n));
}

double nemirovski_kappa(double p, int d) {
  if (!(p >= 1.0)) throw std::invalid_argument("nemirovski_kappa: p must be >= 1");
  if (d < 1) throw std::invalid_argument("nemirovski_kappa: d must be >= 1");
  const double dd = static_cast<double>(d);
  if (p == 2.0) return 1.0;
  if (p <= 2.0) {
    const double power_bound = std::pow(dd, 2.0 / p - 1.0);
    const double log_bound = std::max(1.0, 2.0 * std::exp(1.0) * std::log(dd) - std::exp(1.0));
    return std::min(power_bound, log_bound);
  }
  if (std::isinf(p)) return dd;
  return std::pow(dd, 1.0 - 2.0 / p);
}

double duality_gap_bruteforce(const ConstrainedProblem& problem, const ProxGeometry& geom,
                              const Eigen::VectorXd& x_hat, const Eigen::VectorXd& lambda_hat,
                              double grid_resolution) {
  if (!problem.exact_objective)
    throw std::invalid_argument("duality_gap_bruteforce: exact objective required");
  if (problem.constraint_count > 0 && !problem.exact_constraint)
    throw std::invalid_argument("duality_gap_bruteforce: exact constraint oracle required");
  if (problem.dim > 3)
    throw std::invalid_argument("duality_gap_bruteforce: grid search limited to dim <= 3");
  if (!(grid_resolution > 0.0))
    throw std::invalid_argument("duality_gap_bruteforce: resolution must be positive");
  if ((lambda_hat.array() < 0.0).any())
    throw std::invalid_argument("duality_gap_bruteforce: lambda must be nonnegative");

  std::vector<std::vector<double>> axes(static_cast<std::size_t>(problem.dim));
  for (int j = 0; j < problem.dim; ++j) {
    const double lo = geom.lower[j], hi = geom.upper[j];
    auto& axis = axes[static_cast<std::size_t>(j)];
    for (double v = lo; v < hi; v += grid_resolution) axis.push_back(v);
    axis.push_back(hi);
  }

  double phi = std::numeric_limits<double>::infinity();
  Eigen::VectorXd y(problem.dim);
  std::vector<std::size_t> idx(static_cast<std::size_t>(problem.dim), 0);
  for (;;) {
    for (int j = 0; j < problem.dim; ++j)
      y[j] = axes[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    double lagr = problem.exact_objective(y);
    for (int l = 0; l < problem.constraint_count; ++l)
      lagr += lambda_hat[l] * problem.exact_constraint(l, y);
    phi = std::min(phi, lagr);

    int j = 0;
    for (; j < problem.dim; ++j) {
      auto& i = idx[static_cast<std::size_t>(j)];
      if (++i < axes[static_cast<std::size_t>(j)].size()) break;
      i = 0;
    }
    if (j == problem.dim) break;
  }
  return problem.exact_objective(x_hat) - phi;
}

}  // namespace mirrormdp
