#pragma once

#include <cstdint>
#include <random>

namespace bohmstab {

/// Independent random stream for one work item, derived from a master seed
/// and the item index. Streams do not depend on how items are scheduled, so
/// results are reproducible for any number of worker threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t index)
      : engine_(mix(mix(master_seed) ^ (index + 0x632be59bd9b4e019ULL))) {}

  /// Uniform on [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  // SplitMix64 finalizer: decorrelates neighbouring (seed, index) pairs.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace bohmstab
