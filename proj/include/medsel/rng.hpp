#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace medsel {

// xoshiro256** seeded through splitmix64. The generator and all derived
// distributions are implemented here so a seed reproduces the same stream on
// every platform; the standard library distributions do not guarantee that.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, n), rejection-sampled so there is no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  // Independent stream keyed by `stream`. Depends only on the seed, never on
  // how many values this generator has already produced.
  SeededRng child(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic seed for a path of stream ids below `parent`.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

}  // namespace medsel
