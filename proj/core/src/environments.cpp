#include "mirrormdp/environments.hpp"

#include <cmath>
#include <stdexcept>

namespace mirrormdp {

Mdp river_swim() {
  const int n = 6;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2 * n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * n);
  std::vector<std::vector<int>> pairs(n);
  for (int i = 0; i < n; ++i) {
    pairs[static_cast<std::size_t>(i)] = {2 * i, 2 * i + 1};
    p(2 * i, std::max(i - 1, 0)) = 1.0;  // left
    const int right = 2 * i + 1;
    if (i == 0) {
      p(right, 0) = 0.65;  // the 0.05 slip has nowhere to go
      p(right, 1) = 0.35;
    } else if (i == n - 1) {
      p(right, n - 2) = 0.05;  // the 0.35 advance returns to the last state
      p(right, n - 1) = 0.95;
    } else {
      p(right, i - 1) = 0.05;
      p(right, i) = 0.60;
      p(right, i + 1) = 0.35;
    }
  }
  r[0] = 0.005;
  r[2 * n - 1] = 1.0;
  return Mdp(n, std::move(pairs), std::move(p), std::move(r));
}

namespace {

// Binomial pmf row for small n; exact enough that rows sum to 1 within 1e-12.
std::vector<double> binomial_pmf(int n, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  pmf[0] = std::pow(1.0 - p, n);
  for (int k = 1; k <= n; ++k)
    pmf[static_cast<std::size_t>(k)] = pmf[static_cast<std::size_t>(k - 1)] *
                                       (static_cast<double>(n - k + 1) / k) * (p / (1.0 - p));
  return pmf;
}

}  // namespace

Mdp access_control(int num_servers, double free_prob, std::vector<double> priorities) {
  if (num_servers < 1) throw std::invalid_argument("access_control: num_servers >= 1");
  if (!(free_prob > 0.0 && free_prob < 1.0))
    throw std::invalid_argument("access_control: free_prob in (0,1)");
  if (priorities.empty()) throw std::invalid_argument("access_control: priorities empty");

  const int npri = static_cast<int>(priorities.size());
  const int n_states = (num_servers + 1) * npri;
  const auto sid = [npri](int free, int pri) { return free * npri + pri; };
  const double pri_weight = 1.0 / npri;
  double max_priority = 0.0;
  for (double v : priorities) max_priority = std::max(max_priority, v);

  std::vector<std::vector<int>> pairs(static_cast<std::size_t>(n_states));
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rewards;

  // Next-state row after the decision leaves `busy` servers occupied and
  // `free_after` free; each busy server frees independently this step.
  auto transition_row = [&](int busy, int free_after) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n_states);
    const auto pmf = binomial_pmf(busy, free_prob);
    for (int freed = 0; freed <= busy; ++freed)
      for (int k2 = 0; k2 < npri; ++k2)
        row[sid(free_after + freed, k2)] += pmf[static_cast<std::size_t>(freed)] * pri_weight;
    return row;
  };

  for (int f = 0; f <= num_servers; ++f) {
    for (int k = 0; k < npri; ++k) {
      auto& acts = pairs[static_cast<std::size_t>(sid(f, k))];
      acts.push_back(static_cast<int>(rows.size()));  // reject
      rows.push_back(transition_row(num_servers - f, f));
      rewards.push_back(0.0);
      if (f >= 1) {
        acts.push_back(static_cast<int>(rows.size()));  // accept
        rows.push_back(transition_row(num_servers - f + 1, f - 1));
        rewards.push_back(priorities[static_cast<std::size_t>(k)] / max_priority);
      }
    }
  }

  Eigen::MatrixXd p(rows.size(), n_states);
  for (std::size_t i = 0; i < rows.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = rows[i];
  return Mdp(n_states, std::move(pairs), std::move(p),
             Eigen::Map<const Eigen::VectorXd>(rewards.data(), static_cast<Eigen::Index>(rewards.size())));
}

}  // namespace mirrormdp
