#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nadac {

/// Substreams spawned from one root seed. Each consumer owns its stream so
/// that e.g. switching the probe off leaves the plant noise untouched.
enum class Stream : std::uint64_t {
  kPlantNoise = 1,
  kProbe = 2,
  kPolicy = 3,
  kTestSampling = 4,
};

/// mt19937_64 with hand-rolled uniform/normal transforms; the std
/// distributions are implementation-defined and would break byte-identical
/// outputs across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t root_seed, Stream stream) : Rng(root_seed, static_cast<std::uint64_t>(stream)) {}

  Rng(std::uint64_t root_seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x6e616461u};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nadac
