#include "mirrormdp/amdp.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace mirrormdp {

AmdpProgram::AmdpProgram(const Mdp& mdp, EmpiricalModel model, double t_mix_bound)
    : mdp_(&mdp), model_(std::move(model)), t_mix_bound_(t_mix_bound) {
  if (!(t_mix_bound_ > 0.0)) throw std::invalid_argument("AmdpProgram: t_mix_bound must be positive");
  if (model_.num_pairs() != mdp.num_pairs() || model_.num_states() != mdp.num_states())
    throw std::invalid_argument("AmdpProgram: model shape does not match the MDP");
  p_tilde_ = model_.probabilities();
}

ProxGeometry AmdpProgram::geometry() const {
  const int dim = 1 + mdp_->num_states();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, -box_radius());
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, box_radius());
  lo[0] = 0.0;
  hi[0] = 1.0;
  return ProxGeometry(std::move(lo), std::move(hi));
}

DualEstimate DualEstimate::from_counts(const Mdp& mdp, const std::vector<std::int64_t>& counts,
                                       std::int64_t productive_count) {
  if (productive_count < 1)
    throw std::invalid_argument("DualEstimate: productive_count must be >= 1");
  if (static_cast<int>(counts.size()) != mdp.num_pairs())
    throw std::invalid_argument("DualEstimate: count size mismatch");
  DualEstimate d;
  d.mu_hat = Eigen::VectorXd::Zero(mdp.num_pairs());
  for (int p = 0; p < mdp.num_pairs(); ++p)
    d.mu_hat[p] = static_cast<double>(counts[static_cast<std::size_t>(p)]) /
                  static_cast<double>(productive_count);
  d.lambda = Eigen::VectorXd::Zero(mdp.num_states());
  for (int i = 0; i < mdp.num_states(); ++i)
    for (int pair : mdp.actions(i)) d.lambda[i] += d.mu_hat[pair];
  return d;
}

double constraint_value(const AmdpProgram& program, int pair, const PrimalPoint& point) {
  if (pair < 0 || pair >= program.mdp().num_pairs())
    throw std::out_of_range("constraint_value: pair out of range");
  const int i = program.mdp().pair_state(pair);
  return program.mdp().reward(pair) - point.v_bar + program.p_tilde().row(pair).dot(point.h) -
         point.h[i];
}

StepDeltas apply_productive_step(double& v_bar, double eta) {
  StepDeltas d;
  const double raw = v_bar - eta;
  const double next = std::min(std::max(raw, 0.0), 1.0);
  d.dv = next - v_bar;
  d.clamped = next != raw;
  v_bar = next;
  return d;
}

StepDeltas apply_nonproductive_step(double& v_bar, Eigen::VectorXd& h, int i, int s, double eta,
                                    double box_radius) {
  StepDeltas d;
  const double raw_v = v_bar + eta;
  const double next_v = std::min(std::max(raw_v, 0.0), 1.0);
  d.dv = next_v - v_bar;
  d.clamped = next_v != raw_v;
  v_bar = next_v;
  if (s != i) {  // -eta (e_s - e_i) vanishes when s = i
    const double raw_s = h[s] - eta;
    const double next_s = std::min(std::max(raw_s, -box_radius), box_radius);
    d.ds = next_s - h[s];
    d.clamped = d.clamped || next_s != raw_s;
    h[s] = next_s;
    const double raw_i = h[i] + eta;
    const double next_i = std::min(std::max(raw_i, -box_radius), box_radius);
    d.di = next_i - h[i];
    d.clamped = d.clamped || next_i != raw_i;
    h[i] = next_i;
  }
  return d;
}

double cache_delta_nonproductive(double dv, int i, double di, int s, double ds, int j_state,
                                 double ptilde_js, double ptilde_ji) {
  double delta = -dv + ptilde_js * ds + ptilde_ji * di;
  if (j_state == s) delta -= ds;
  if (j_state == i) delta -= di;
  return delta;
}

ConstraintCache ConstraintCache::initial(const Mdp& mdp) {
  ConstraintCache cache;
  cache.c_ = mdp.rewards();
  return cache;
}

void ConstraintCache::update_productive(double eta) {
  c_.array() += eta;
  ++k_;
}

void ConstraintCache::update_nonproductive(int i, int s, double eta,
                                           const Eigen::MatrixXd& p_tilde, const Mdp& mdp) {
  StepDeltas d;
  d.dv = eta;
  if (s != i) {
    d.ds = -eta;
    d.di = eta;
  }
  update_nonproductive_deltas(d, i, s, p_tilde, mdp);
}

void ConstraintCache::update_productive_deltas(double dv) {
  c_.array() += -dv;
  ++k_;
}

void ConstraintCache::update_nonproductive_deltas(const StepDeltas& d, int i, int s,
                                                  const Eigen::MatrixXd& p_tilde, const Mdp& mdp) {
  for (int j = 0; j < static_cast<int>(c_.size()); ++j)
    c_[j] += cache_delta_nonproductive(d.dv, i, d.di, s, d.ds, mdp.pair_state(j),
                                       p_tilde(j, s), p_tilde(j, i));
  ++k_;
}

AmdpStepPlan AmdpStepPlan::from_config(const SolverConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("AmdpStepPlan: epsilon must be positive");
  AmdpStepPlan plan;
  plan.eps_tilde = cfg.epsilon / 16.0;
  plan.delta = cfg.epsilon / 16.0;
  plan.eta = cfg.eta.value_or(cfg.epsilon / 64.0);
  if (!(plan.eta > 0.0)) throw std::invalid_argument("AmdpStepPlan: stepsize must be positive");
  return plan;
}

AmdpSolveResult solve(const AmdpProgram& program, const SolverConfig& cfg) {
  const Mdp& mdp = program.mdp();
  const int a_tot = mdp.num_pairs();
  const int n_states = mdp.num_states();
  const AmdpStepPlan plan = AmdpStepPlan::from_config(cfg);
  const double box = program.box_radius();
  const GenerativeModel gen(mdp);

  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(a_tot));
  for (int p = 0; p < a_tot; ++p) streams.emplace_back(derive_stream(cfg.seed, static_cast<std::uint64_t>(p)));

  double v_bar = 0.0;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n_states);
  ConstraintCache cache = ConstraintCache::initial(mdp);
  assert(([&] {  // c^0 must equal g_delta at the start point (0, 0)
    PrimalPoint origin{0.0, Eigen::VectorXd::Zero(n_states)};
    for (int p = 0; p < a_tot; ++p)
      if (std::abs(cache.values()[p] - constraint_value(program, p, origin)) > 1e-15) return false;
    return true;
  }()));

  double v_sum = 0.0;
  Eigen::VectorXd h_sum = Eigen::VectorXd::Zero(n_states);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(a_tot), 0);
  std::int64_t productive = 0;
  std::int64_t nonproductive = 0;
  std::vector<TraceRecord> trace;
  if (cfg.record_trace) trace.reserve(static_cast<std::size_t>(cfg.iterations));
  const auto t0 = std::chrono::steady_clock::now();

  for (std::int64_t k = 0; k < cfg.iterations; ++k) {
    int argmax = 0;
    double max_c = cache.values()[0];
    for (int p = 1; p < a_tot; ++p) {
      if (cache.values()[p] > max_c) {  // strict: lowest pair id wins ties
        max_c = cache.values()[p];
        argmax = p;
      }
    }
    const bool is_productive = max_c <= plan.threshold();

    TraceRecord rec;
    if (cfg.record_trace) {
      rec.k = k;
      rec.productive = is_productive;
      rec.max_approx_constraint = max_c;
      rec.objective_value = v_bar;
    }

    if (is_productive) {
      v_sum += v_bar;
      h_sum += h;
      ++productive;
      const StepDeltas d = apply_productive_step(v_bar, plan.eta);
      if (d.clamped)
        cache.update_productive_deltas(d.dv);
      else
        cache.update_productive(plan.eta);
    } else {
      ++nonproductive;
      ++counts[static_cast<std::size_t>(argmax)];
      if (cfg.record_trace) rec.chosen_constraint = argmax;
      const int i = mdp.pair_state(argmax);
      const int s = gen.sample_next_state(argmax, streams[static_cast<std::size_t>(argmax)]);
      const StepDeltas d = apply_nonproductive_step(v_bar, h, i, s, plan.eta, box);
      if (d.clamped)
        cache.update_nonproductive_deltas(d, i, s, program.p_tilde(), mdp);
      else
        cache.update_nonproductive(i, s, plan.eta, program.p_tilde(), mdp);
    }

    if (cfg.record_trace) {
      rec.elapsed =
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0);
      trace.push_back(rec);
    }
  }

  if (productive == 0) throw NoProductiveStepsError(std::move(trace));

  AmdpSolveResult out;
  out.x_hat.v_bar = v_sum / static_cast<double>(productive);
  out.x_hat.h = h_sum / static_cast<double>(productive);
  out.dual = DualEstimate::from_counts(mdp, counts, productive);
  out.productive_count = productive;
  out.nonproductive_count = nonproductive;
  out.trace = std::move(trace);
  return out;
}

Policy round_policy(const DualEstimate& dual, const Mdp& mdp) {
  if (dual.mu_hat.size() != mdp.num_pairs())
    throw std::invalid_argument("round_policy: mu size mismatch");
  if ((dual.mu_hat.array() < 0.0).any())
    throw std::invalid_argument("round_policy: mu must be nonnegative");
  Policy pi;
  pi.probs.resize(static_cast<std::size_t>(mdp.num_states()));
  for (int i = 0; i < mdp.num_states(); ++i) {
    const auto& pairs = mdp.actions(i);
    auto& row = pi.probs[static_cast<std::size_t>(i)];
    row.assign(pairs.size(), 0.0);
    double lam = 0.0;
    for (int pair : pairs) lam += dual.mu_hat[pair];
    if (lam > 0.0) {
      for (std::size_t a = 0; a < pairs.size(); ++a) row[a] = dual.mu_hat[pairs[a]] / lam;
    } else {
      row.assign(pairs.size(), 1.0 / static_cast<double>(pairs.size()));
    }
  }
  return pi;
}

std::int64_t theoretical_iterations(const AmdpProgram& program, double sigma, double epsilon) {
  return theoretical_iterations_primal_dual(program.theta_bar_sq(), program.lipschitz(), sigma,
                                            epsilon, 1.0);
}

}  // namespace mirrormdp
