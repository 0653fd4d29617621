#include "mirrormdp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mirrormdp {

namespace {
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t index) {
  // Two finalizer rounds over (seed, index); avoids low-entropy collisions
  // for small consecutive indices.
  std::uint64_t h = mix64(master_seed + 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ (index + 0xD1B54A32D192ED03ull));
  return h;
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_categorical: empty distribution");
  const double u = rng.next_double();
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  if (last_positive < 0) throw std::invalid_argument("sample_categorical: all-zero distribution");
  return last_positive;
}

std::vector<double> sample_uniform_simplex(int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_uniform_simplex: k must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (auto& v : w) {
    v = -std::log1p(-rng.next_double());  // Exp(1)
    sum += v;
  }
  if (sum <= 0.0) {
    for (auto& v : w) v = 1.0 / k;
    return w;
  }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace mirrormdp
