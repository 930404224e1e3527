#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace homloc {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-addressed generator: draw j of stream s under seed k is a pure
/// function of (k, s, j). Streams are keyed by pair or replication index so
/// results never depend on scheduling.
class CounterRng {
 public:
  static constexpr const char* kGeneratorId = "splitmix64-counter/box-muller v1";

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream ^ 0x6a09e667f3bcc909ULL))) {}

  std::uint64_t next() {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  /// One standard normal via Box-Muller (consumes two draws).
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Child seed for replication or batch `index` under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0xbb67ae8584caa73bULL));
}

}  // namespace homloc
