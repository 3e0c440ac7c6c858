#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sdec {

// Deterministic random stream. Every stochastic component in the toolkit
// draws from one of these, so a run is reproducible from its master seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on {0, ..., n - 1} by rejection, n >= 1.
  int uniform_int(int n);

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal();

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Expands a master seed into an independent substream. Streams with distinct
// (label, index) pairs are decorrelated by seed hashing; the same pair always
// yields the same stream.
Rng derive_stream(std::uint64_t master_seed, std::string_view label,
                  std::uint64_t index = 0);

}  // namespace sdec
