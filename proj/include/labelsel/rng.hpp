#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace labelsel {

using Seed = std::uint64_t;

/// splitmix64 finalizer; used to derive independent sub-streams from a seed.
Seed derive_seed(Seed base, std::uint64_t stream) noexcept;

/// Seeded generator whose draws do not depend on the standard library's
/// distribution implementations, so outputs are identical across toolchains.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  /// Standard normal via Box-Muller.
  double normal();

  /// First `count` entries of a uniformly random permutation of 0..n-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace labelsel
