#pragma once

#include <cstdint>
#include <span>

namespace ncomp {

// splitmix64 step; the generator behind seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based seed split: a master seed plus up to three counters maps to
// an independent stream seed. Parallel and serial rollouts derive the same
// seeds, so execution order never changes results.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// xoshiro256** with hand-rolled distributions. The standard <random>
// distributions are implementation-defined sequences; these are pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                              // [0, 1)
  double uniform(double lo, double hi);          // [lo, hi)
  double normal();                               // standard normal, Box-Muller
  bool bernoulli(double p);                      // true with probability p
  int categorical(std::span<const double> probs);// inverse-CDF over given pmf

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ncomp
