#pragma once

#include <cstdint>

namespace majsim {

// xoshiro256++ 1.0 (Blackman & Vigna), seeded through splitmix64.
// Fixed here (rather than std::mt19937 + distributions) so that streams are
// reproducible bit-for-bit across platforms and language ports.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    // splitmix64 expansion of the scalar seed into the 256-bit state
    std::uint64_t z = seed;
    for (auto& si : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      std::uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
      t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
      si = t ^ (t >> 31);
    }
  }

  std::uint64_t next() {
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

  // uniform double in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // independent child stream for a labelled sub-task (trial, grid point, ...)
  Xoshiro256pp fork(std::uint64_t label) const {
    Xoshiro256pp child(0);
    std::uint64_t z = s_[0] ^ (0x9e3779b97f4a7c15ULL * (label + 1));
    for (auto& si : child.s_) {
      z += 0x9e3779b97f4a7c15ULL;
      std::uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
      t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
      si = t ^ (t >> 31);
    }
    return child;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace majsim
