#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mirrormdp {

/// Deterministic 64-bit generator (SplitMix64). Bit-exact across platforms,
/// which the trace-replay and parallel/sequential equivalence contracts rely
/// on; std:: distributions are not portable, so sampling helpers live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Deterministic sub-stream seed from (master_seed, index). Oracles and
/// workers derive their streams through this so that sequential and parallel
/// execution consume identical sample sequences per stream.
std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t index);

/// Index of a categorical draw from `probs` (need not be exactly normalized;
/// the last positive entry absorbs rounding slack).
int sample_categorical(std::span<const double> probs, Rng& rng);

/// One draw from Dirichlet(1,...,1), i.e. uniform on the (k-1)-simplex.
std::vector<double> sample_uniform_simplex(int k, Rng& rng);

}  // namespace mirrormdp
