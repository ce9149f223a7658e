#pragma once

// Counter-based random streams. Each (master seed, stream index) pair names
// an independent stream whose k-th output is a pure function of (key, k), so
// replicate r of a Monte Carlo run draws identical numbers no matter how the
// replicates are scheduled or batched.
//
// The generator is the SplitMix64 finalizer over key + k * phi, the same
// construction used by SplittableRandom. Keys are scrambled twice so that
// distinct streams never share an affine counter relation.

#include <cmath>
#include <cstdint>

namespace consensus {

class StreamRng {
 public:
  StreamRng(std::uint64_t master_seed, std::uint64_t stream_index)
      : key_(mix(mix(master_seed + kPhi) ^ mix(stream_index + kGamma))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kPhi); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Exponential waiting time with the given rate; strictly positive.
  double exponential(double rate) {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return -std::log(u) / rate;
  }

  /// Uniform integer in [0, n) by 128-bit multiply; bias < 2^-64.
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static constexpr std::uint64_t kPhi = 0x9e3779b97f4a7c15ull;
  static constexpr std::uint64_t kGamma = 0xd1b54a32d192ed03ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace consensus
