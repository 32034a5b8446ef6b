#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace astpa {

/// splitmix64 mixing step; used to derive independent substream seeds from a
/// master seed so that adding workers never changes which stream a
/// replication sees.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based substream derivation: stream k of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return splitmix64(master ^ splitmix64(counter));
}

/// Random stream used throughout. Thin wrapper over mt19937_64 so call sites
/// share one normal/uniform idiom and streams can be cloned in tests.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }

  std::vector<double> normal_vector(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = normal();
    return v;
  }

  /// Integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(engine_));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace astpa
