#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace smaq {

/// Named stream families. Every random draw in the library comes from a
/// generator seeded by derive_seed(top_seed, component, index), so the
/// draws for replication r never depend on how many threads ran before it.
enum class StreamId : std::uint64_t {
  kTrainCovariates = 1,
  kTrainErrors = 2,
  kTestCovariates = 3,
  kTestErrors = 4,
  kSplit = 5,
  kBootstrap = 6,
  kBootstrapRetry = 7,
  kCrossValidation = 8,
  kError = 9,
};

/// splitmix64 finalizer applied to (seed, component, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t component,
                          std::uint64_t index);

inline std::uint64_t derive_seed(std::uint64_t seed, StreamId component,
                                 std::uint64_t index) {
  return derive_seed(seed, static_cast<std::uint64_t>(component), index);
}

/// Portable generator: mt19937_64 bits with hand-written transforms, so the
/// same seed yields the same doubles on every standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal();

  /// Student t with integer degrees of freedom.
  double student_t(int dof);

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

private:
  std::mt19937_64 engine_;
};

}  // namespace smaq
