// rng.hpp: keyed, stream-splittable random source with pinned bit streams
#pragma once

#include <cmath>
#include <cstdint>

namespace fluxkit {

// splitmix64 step; also used to mix (seed, stream) keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a2ca4ac794b5ULL;
  return z ^ (z >> 31);
}

// xoshiro256++ seeded via splitmix64 from a (seed, stream) key. Streams keyed
// by trajectory/record index are independent of scheduling order, so serial
// and parallel ensembles produce identical bits.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    for (auto& w : s_) w = splitmix64(sm);
    have_gauss_ = false;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller (pair cached)
  double next_gaussian() {
    if (have_gauss_) {
      have_gauss_ = false;
      return cached_gauss_;
    }
    double u1 = 0.0;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_gauss_ = r * std::sin(a);
    have_gauss_ = true;
    return r * std::cos(a);
  }

  // binomial by direct Bernoulli counting (n is a shot count, small enough)
  int next_binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i) k += (next_double() < p) ? 1 : 0;
    return k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
  bool have_gauss_ = false;
  double cached_gauss_ = 0.0;
};

}  // namespace fluxkit
