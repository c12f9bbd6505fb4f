#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace grassfield {

/// Seeded source with platform-independent draws. std::mt19937_64 has a
/// fully specified output sequence; the standard distributions do not, so
/// the mappings to [0, 1) and to indices are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double u = 0.0;
    do {
      u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  double exponential() { return -std::log(uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace grassfield
