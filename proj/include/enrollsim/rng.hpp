#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace enrollsim::rng {

// SplitMix64 finalizer. Used for seed derivation, never as the run engine.
constexpr std::uint64_t split_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Folds one component into a running seed hash. Chaining parts gives every
// (label, index, ...) tuple its own well-separated stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t part) noexcept {
  return split_mix(seed + kGolden + part);
}

inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> parts) noexcept {
  for (std::uint64_t p : parts) seed = derive_seed(seed, p);
  return seed;
}

// FNV-1a 64. Turns stream labels into seed parts; also used for file digests.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard. All sampling on top of it lives here:
// the standard library distributions are implementation-defined, so relying
// on them would tie results to one libstdc++ version.
class Engine {
 public:
  explicit Engine(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0,1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [0,n). Rejection sampling, no modulo bias. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return next_unit() < p; }

  // Binomial(n, p) by explicit simulation: a Bernoulli loop for small n,
  // otherwise geometric jumps between successes. Expected cost O(n p + 1).
  std::int64_t binomial(std::int64_t n, double p);

  // Poisson(lambda) by inversion of exponential gaps. Exact for the small
  // means used here; cost O(lambda + 1).
  std::int64_t poisson(double lambda);

  // Uniform k-subset: after the call v[0..k) holds the sample, order random.
  // Partial Fisher-Yates, k draws.
  template <class T>
  void partial_shuffle(std::vector<T>& v, std::size_t k) {
    if (k > v.size()) k = v.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(v.size() - i));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace enrollsim::rng
