#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sdr {

// mt19937_64 wrapped with explicit transforms instead of std distributions,
// which are implementation defined; draws here are identical on every
// platform, and (seed, stream) pairs give independent substreams so
// replication r of a simulation never depends on who else ran.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    gen_.seed(seq);
  }

  // [0, 1)
  double uniform() { return (gen_() >> 11) * 0x1p-53; }

  // (0, 1]
  double uniform_pos() { return ((gen_() >> 11) + 1) * 0x1p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without the cached partner, so state is a single engine.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double bernoulli(double p) { return uniform() < p ? 1.0 : 0.0; }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sdr
