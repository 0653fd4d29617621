#include "mirrormdp/mdp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace mirrormdp {

namespace {
constexpr double kRowSumTol = 1e-12;
}

Mdp::Mdp(int num_states, std::vector<std::vector<int>> state_pairs, Eigen::MatrixXd transitions,
         Eigen::VectorXd rewards)
    : num_states_(num_states),
      state_pairs_(std::move(state_pairs)),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)) {
  if (num_states_ < 1) throw std::invalid_argument("Mdp: need at least one state");
  if (static_cast<int>(state_pairs_.size()) != num_states_)
    throw std::invalid_argument("Mdp: state_pairs size mismatch");
  const int a_tot = static_cast<int>(transitions_.rows());
  if (transitions_.cols() != num_states_) throw std::invalid_argument("Mdp: transition column count");
  if (rewards_.size() != a_tot) throw std::invalid_argument("Mdp: reward size mismatch");

  pair_state_.assign(static_cast<std::size_t>(a_tot), -1);
  int seen = 0;
  for (int i = 0; i < num_states_; ++i) {
    const auto& pairs = state_pairs_[static_cast<std::size_t>(i)];
    if (pairs.empty()) throw std::invalid_argument("Mdp: every state needs at least one action");
    for (int p : pairs) {
      if (p < 0 || p >= a_tot || pair_state_[static_cast<std::size_t>(p)] != -1)
        throw std::invalid_argument("Mdp: state_pairs must partition pair ids");
      pair_state_[static_cast<std::size_t>(p)] = i;
      ++seen;
    }
  }
  if (seen != a_tot) throw std::invalid_argument("Mdp: unassigned pair ids");

  for (int p = 0; p < a_tot; ++p) {
    if ((transitions_.row(p).array() < 0.0).any())
      throw std::invalid_argument("Mdp: negative transition probability");
    if (std::abs(transitions_.row(p).sum() - 1.0) > kRowSumTol)
      throw std::invalid_argument("Mdp: transition row does not sum to 1");
    if (rewards_[p] < 0.0 || rewards_[p] > 1.0)
      throw std::invalid_argument("Mdp: rewards must lie in [0,1]");
  }
}

Policy Policy::deterministic(const Mdp& mdp, const std::vector<int>& local_action) {
  if (static_cast<int>(local_action.size()) != mdp.num_states())
    throw std::invalid_argument("Policy::deterministic: size mismatch");
  Policy pi;
  pi.probs.resize(static_cast<std::size_t>(mdp.num_states()));
  for (int i = 0; i < mdp.num_states(); ++i) {
    const auto& pairs = mdp.actions(i);
    const int a = local_action[static_cast<std::size_t>(i)];
    if (a < 0 || a >= static_cast<int>(pairs.size()))
      throw std::invalid_argument("Policy::deterministic: local action out of range");
    pi.probs[static_cast<std::size_t>(i)].assign(pairs.size(), 0.0);
    pi.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = 1.0;
  }
  return pi;
}

Policy Policy::uniform(const Mdp& mdp) {
  Policy pi;
  pi.probs.resize(static_cast<std::size_t>(mdp.num_states()));
  for (int i = 0; i < mdp.num_states(); ++i) {
    const auto k = mdp.actions(i).size();
    pi.probs[static_cast<std::size_t>(i)].assign(k, 1.0 / static_cast<double>(k));
  }
  return pi;
}

void Policy::validate(const Mdp& mdp) const {
  if (static_cast<int>(probs.size()) != mdp.num_states())
    throw std::invalid_argument("Policy: state count mismatch");
  for (int i = 0; i < mdp.num_states(); ++i) {
    const auto& row = probs[static_cast<std::size_t>(i)];
    if (row.size() != mdp.actions(i).size())
      throw std::invalid_argument("Policy: action count mismatch");
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0) throw std::invalid_argument("Policy: negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw std::invalid_argument("Policy: state distribution does not sum to 1");
  }
}

int GenerativeModel::sample_next_state(int pair, Rng& rng) const {
  const auto row = mdp_->row(pair);
  return sample_categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), rng);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> induced_chain(const Mdp& mdp, const Policy& pi) {
  pi.validate(mdp);
  const int n = mdp.num_states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const auto& pairs = mdp.actions(i);
    for (std::size_t a = 0; a < pairs.size(); ++a) {
      const double w = pi.probs[static_cast<std::size_t>(i)][a];
      if (w == 0.0) continue;
      p.row(i) += w * mdp.row(pairs[a]);
      r[i] += w * mdp.reward(pairs[a]);
    }
  }
  return {std::move(p), std::move(r)};
}

namespace {

double stationary_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& nu) {
  return (p.transpose() * nu - nu).lpNorm<1>();
}

std::optional<Eigen::VectorXd> stationary_by_least_squares(const Eigen::MatrixXd& p, double tol) {
  const int n = static_cast<int>(p.rows());
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.bottomRows(1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b[n] = 1.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < n)  // rank(P^T - I) < n-1: several stationary distributions
    throw std::runtime_error("stationary_distribution: chain is not unichain");
  Eigen::VectorXd nu = qr.solve(b);

  for (int i = 0; i < n; ++i) {
    if (nu[i] < -1e-9) return std::nullopt;
    if (nu[i] < 0.0) nu[i] = 0.0;
  }
  const double sum = nu.sum();
  if (sum <= 0.0) return std::nullopt;
  nu /= sum;
  if (stationary_residual(p, nu) > tol) return std::nullopt;
  return nu;
}

std::optional<Eigen::VectorXd> stationary_by_power_iteration(const Eigen::MatrixXd& p,
                                                             double tol) {
  // Cesaro-averaged power iteration; handles periodic chains the plain power
  // method cannot.
  const int n = static_cast<int>(p.rows());
  Eigen::VectorXd q = Eigen::VectorXd::Constant(n, 1.0 / n);
  Eigen::VectorXd avg = q;
  const Eigen::MatrixXd pt = p.transpose();
  for (int t = 1; t <= 2000000; ++t) {
    q = pt * q;
    avg += (q - avg) / static_cast<double>(t + 1);
    if (t % 64 == 0 && stationary_residual(p, avg) <= tol) return avg;
  }
  if (stationary_residual(p, avg) <= tol) return avg;
  return std::nullopt;
}

}  // namespace

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p_pi, double tol) {
  if (p_pi.rows() != p_pi.cols() || p_pi.rows() == 0)
    throw std::invalid_argument("stationary_distribution: matrix must be square");
  if (auto nu = stationary_by_least_squares(p_pi, tol)) return *nu;
  if (auto nu = stationary_by_power_iteration(p_pi, tol)) return *nu;
  throw std::runtime_error("stationary_distribution: no unique distribution at tolerance");
}

double policy_value(const Mdp& mdp, const Policy& pi) {
  auto [p, r] = induced_chain(mdp, pi);
  const Eigen::VectorXd nu = stationary_distribution(p);
  return nu.dot(r);
}

RviResult optimal_gain_rvi(const Mdp& mdp, double tol, std::int64_t max_iters) {
  const int n = mdp.num_states();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q(n);

  // Damped updates q_i = max_a 0.5*(r + P h)_i + 0.5*h_i keep the iteration
  // aperiodic; the fixed point solves the undamped Bellman equations with
  // gain v = 2*v_damped.
  auto backup = [&](const Eigen::VectorXd& bias, int i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int pair : mdp.actions(i)) {
      const double v = mdp.reward(pair) + mdp.row(pair).dot(bias);
      best = std::max(best, v);
    }
    return 0.5 * best + 0.5 * bias[i];
  };

  std::int64_t it = 0;
  for (; it < max_iters; ++it) {
    for (int i = 0; i < n; ++i) q[i] = backup(h, i);
    const Eigen::VectorXd delta = q - h;
    const double span = delta.maxCoeff() - delta.minCoeff();
    h = q - Eigen::VectorXd::Constant(n, q[0]);
    if (span < 0.5 * tol) break;
  }
  if (it == max_iters) throw std::runtime_error("optimal_gain_rvi: no convergence");

  // Recover the undamped gain and certify the Bellman residual directly.
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int pair : mdp.actions(i)) best = std::max(best, mdp.reward(pair) + mdp.row(pair).dot(h));
    const double g = best - h[i];
    vmin = std::min(vmin, g);
    vmax = std::max(vmax, g);
  }
  RviResult res;
  res.gain = 0.5 * (vmin + vmax);
  res.bias = h;
  res.iterations = it;

  std::vector<int> greedy(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const auto& pairs = mdp.actions(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < pairs.size(); ++a) {
      const double v = mdp.reward(pairs[a]) + mdp.row(pairs[a]).dot(h);
      if (v > best) {
        best = v;
        greedy[static_cast<std::size_t>(i)] = static_cast<int>(a);
      }
    }
  }
  res.greedy = Policy::deterministic(mdp, greedy);
  return res;
}

std::optional<std::int64_t> mixing_time_exact(const Eigen::MatrixXd& p_pi, std::int64_t t_max) {
  const Eigen::VectorXd nu = stationary_distribution(p_pi);
  const int n = static_cast<int>(p_pi.rows());
  Eigen::MatrixXd q = p_pi;  // row i of p_pi^t = distribution after t steps from i
  for (std::int64_t t = 1; t <= t_max; ++t) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, (q.row(i).transpose() - nu).lpNorm<1>());
    if (worst <= 0.5) return t;
    q = q * p_pi;
  }
  return std::nullopt;
}

std::int64_t estimate_mixing_time(const Mdp& mdp, int num_policies, std::int64_t t_max,
                                  std::uint64_t seed) {
  if (num_policies < 1) throw std::invalid_argument("estimate_mixing_time: num_policies >= 1");

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, 8));
  std::atomic<int> next{0};
  std::vector<std::int64_t> results(static_cast<std::size_t>(num_policies), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(num_policies));

  auto worker = [&]() {
    for (;;) {
      const int p = next.fetch_add(1);
      if (p >= num_policies) return;
      try {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(p)));
        Policy pi;
        pi.probs.resize(static_cast<std::size_t>(mdp.num_states()));
        for (int i = 0; i < mdp.num_states(); ++i)
          pi.probs[static_cast<std::size_t>(i)] =
              sample_uniform_simplex(static_cast<int>(mdp.actions(i).size()), rng);
        auto [pp, rr] = induced_chain(mdp, pi);
        const auto t = mixing_time_exact(pp, t_max);
        if (!t) throw std::runtime_error("policy exceeded t_max (mixing assumption violated)");
        results[static_cast<std::size_t>(p)] = *t;
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(p)] = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (int p = 0; p < num_policies; ++p)
    if (!errors[static_cast<std::size_t>(p)].empty())
      throw std::runtime_error("estimate_mixing_time: policy " + std::to_string(p) + ": " +
                               errors[static_cast<std::size_t>(p)]);
  return *std::max_element(results.begin(), results.end());
}

std::string mdp_to_json(const Mdp& mdp) {
  nlohmann::ordered_json root;
  root["num_states"] = mdp.num_states();
  auto& states = root["states"];
  states = nlohmann::ordered_json::array();
  for (int i = 0; i < mdp.num_states(); ++i) {
    nlohmann::ordered_json st;
    auto& actions = st["actions"];
    actions = nlohmann::ordered_json::array();
    for (int pair : mdp.actions(i)) {
      nlohmann::ordered_json act;
      act["reward"] = mdp.reward(pair);
      act["row"] = std::vector<double>(mdp.row(pair).begin(), mdp.row(pair).end());
      actions.push_back(std::move(act));
    }
    states.push_back(std::move(st));
  }
  return root.dump(2);
}

Mdp mdp_from_json(const std::string& text) {
  const auto root = nlohmann::json::parse(text);
  const int n = root.at("num_states").get<int>();
  const auto& states = root.at("states");
  if (static_cast<int>(states.size()) != n)
    throw std::invalid_argument("mdp_from_json: states array size mismatch");

  std::vector<std::vector<int>> state_pairs(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rewards;
  for (int i = 0; i < n; ++i) {
    for (const auto& act : states.at(static_cast<std::size_t>(i)).at("actions")) {
      const auto row = act.at("row").get<std::vector<double>>();
      if (static_cast<int>(row.size()) != n)
        throw std::invalid_argument("mdp_from_json: transition row length mismatch");
      state_pairs[static_cast<std::size_t>(i)].push_back(static_cast<int>(rows.size()));
      rows.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), n));
      rewards.push_back(act.at("reward").get<double>());
    }
  }
  Eigen::MatrixXd p(rows.size(), n);
  for (std::size_t k = 0; k < rows.size(); ++k) p.row(static_cast<Eigen::Index>(k)) = rows[k];
  return Mdp(n, std::move(state_pairs), std::move(p),
             Eigen::Map<const Eigen::VectorXd>(rewards.data(), static_cast<Eigen::Index>(rewards.size())));
}

Mdp load_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open MDP file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return mdp_from_json(ss.str());
}

std::string policy_to_json(const Mdp& mdp, const Policy& pi) {
  pi.validate(mdp);
  nlohmann::ordered_json root;
  root["num_states"] = mdp.num_states();
  root["policy"] = pi.probs;
  return root.dump(2);
}

Policy policy_from_json(const Mdp& mdp, const std::string& text) {
  const auto root = nlohmann::json::parse(text);
  Policy pi;
  pi.probs = root.at("policy").get<std::vector<std::vector<double>>>();
  pi.validate(mdp);
  return pi;
}

Policy load_policy_file(const Mdp& mdp, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_json(mdp, ss.str());
}

}  // namespace mirrormdp
