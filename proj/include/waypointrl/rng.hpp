#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace waypointrl {

// splitmix64 finalizer, used to derive independent child seeds from a master
// seed. Stream ids make the derivation hierarchical: split(split(s, a), b).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 1));
}

// Deterministic random stream. All distributions are implemented on top of
// the raw mt19937_64 output so that sampled values are identical across
// standard-library implementations (std::uniform_real_distribution and
// friends are not portable bit-for-bit).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], both inclusive. Rejection sampling keeps the
  // distribution exact.
  int uniform_int(int lo, int hi) {
    const std::uint64_t n = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return lo + static_cast<int>(x % n);
  }

  // Box-Muller without the cached spare, so stream state stays simple.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * mag * std::cos(2.0 * M_PI * u2);
  }

  // The engine state round-trips through text; used by checkpoints.
  std::string state() const {
    std::ostringstream out;
    out << gen_;
    return out.str();
  }
  void set_state(const std::string& text) {
    std::istringstream in(text);
    in >> gen_;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace waypointrl
