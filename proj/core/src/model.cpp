#include "mirrormdp/model.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace mirrormdp {

EmpiricalModel::EmpiricalModel(std::vector<std::vector<std::int64_t>> counts,
                               std::int64_t samples_per_pair)
    : counts_(std::move(counts)), n_(samples_per_pair) {
  if (n_ < 1) throw std::invalid_argument("EmpiricalModel: samples_per_pair must be >= 1");
  if (counts_.empty()) throw std::invalid_argument("EmpiricalModel: no pairs");
  const std::size_t width = counts_[0].size();
  for (const auto& row : counts_) {
    if (row.size() != width) throw std::invalid_argument("EmpiricalModel: ragged counts");
    std::int64_t sum = 0;
    for (std::int64_t c : row) {
      if (c < 0) throw std::invalid_argument("EmpiricalModel: negative count");
      sum += c;
    }
    if (sum != n_) throw std::invalid_argument("EmpiricalModel: counts must sum to n");
  }
}

Eigen::VectorXd EmpiricalModel::row(int pair) const {
  const auto& c = counts_.at(static_cast<std::size_t>(pair));
  Eigen::VectorXd out(static_cast<Eigen::Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = static_cast<double>(c[j]) / static_cast<double>(n_);
  return out;
}

Eigen::MatrixXd EmpiricalModel::probabilities() const {
  Eigen::MatrixXd p(num_pairs(), num_states());
  for (int a = 0; a < num_pairs(); ++a) p.row(a) = row(a);
  return p;
}

std::int64_t required_samples_l1(int d, double sigma_prime, double delta_l1) {
  if (d < 1) throw std::invalid_argument("required_samples_l1: d must be >= 1");
  if (!(sigma_prime > 0.0 && sigma_prime < 1.0))
    throw std::invalid_argument("required_samples_l1: sigma' must lie in (0,1)");
  if (!(delta_l1 > 0.0)) throw std::invalid_argument("required_samples_l1: delta' must be positive");
  const double n = (8.0 * d + 4.0 * std::log(1.0 / sigma_prime)) / (delta_l1 * delta_l1);
  return static_cast<std::int64_t>(std::ceil(n));
}

std::int64_t required_samples_constraint(int num_states, int a_tot, double sigma_prime,
                                         double delta_prime, double box_radius) {
  if (a_tot < 1) throw std::invalid_argument("required_samples_constraint: a_tot must be >= 1");
  if (!(box_radius > 0.0))
    throw std::invalid_argument("required_samples_constraint: box_radius must be positive");
  if (!(delta_prime > 0.0))
    throw std::invalid_argument("required_samples_constraint: delta' must be positive");
  return required_samples_l1(num_states, sigma_prime / a_tot, delta_prime / box_radius);
}

EmpiricalModel estimate_model(const GenerativeModel& gen, std::int64_t n_per_pair,
                              std::uint64_t seed, bool parallel) {
  if (n_per_pair < 1) throw std::invalid_argument("estimate_model: n_per_pair must be >= 1");
  const Mdp& mdp = gen.mdp();
  const int a_tot = mdp.num_pairs();
  const int n_states = mdp.num_states();
  std::vector<std::vector<std::int64_t>> counts(
      static_cast<std::size_t>(a_tot), std::vector<std::int64_t>(static_cast<std::size_t>(n_states), 0));

  auto estimate_pair = [&](int pair) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(pair)));
    auto& row = counts[static_cast<std::size_t>(pair)];
    for (std::int64_t i = 0; i < n_per_pair; ++i)
      ++row[static_cast<std::size_t>(gen.sample_next_state(pair, rng))];
  };

  if (!parallel) {
    for (int pair = 0; pair < a_tot; ++pair) estimate_pair(pair);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int pair = next.fetch_add(1);
        if (pair >= a_tot) return;
        estimate_pair(pair);
      }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<unsigned>(hw, 8); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return EmpiricalModel(std::move(counts), n_per_pair);
}

std::string empirical_model_to_json(const EmpiricalModel& model) {
  nlohmann::ordered_json root;
  root["samples_per_pair"] = model.samples_per_pair();
  root["counts"] = model.counts();
  return root.dump(2);
}

EmpiricalModel empirical_model_from_json(const std::string& text) {
  const auto root = nlohmann::json::parse(text);
  return EmpiricalModel(root.at("counts").get<std::vector<std::vector<std::int64_t>>>(),
                        root.at("samples_per_pair").get<std::int64_t>());
}

}  // namespace mirrormdp
