#pragma once

#include <cstdint>
#include <cmath>

#include <Eigen/Dense>

namespace pmdlab {

/// Counter-based 64-bit generator (SplitMix64). Streams are derived by
/// hashing a master seed with up to four component indices, so rollouts for
/// distinct (iteration, state, action, trajectory) tuples are independent of
/// execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e589ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Derive an independent stream from a master seed and component indices.
  static Rng stream(std::uint64_t master, std::uint64_t a = 0,
                    std::uint64_t b = 0, std::uint64_t c = 0,
                    std::uint64_t d = 0) {
    std::uint64_t s = mix(master);
    s = mix(s ^ mix(a + 0x1000000001ULL));
    s = mix(s ^ mix(b + 0x2000000002ULL));
    s = mix(s ^ mix(c + 0x3000000003ULL));
    s = mix(s ^ mix(d + 0x4000000004ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e589ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  /// Sample an index from a probability row (ascending cumulative walk).
  int next_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
    const double u = next_unit();
    double cum = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      cum += probs(i);
      if (u < cum) return i;
    }
    // Rounding spill: return the last index with positive mass.
    for (int i = n - 1; i >= 0; --i) {
      if (probs(i) > 0.0) return i;
    }
    return n - 1;
  }

  /// Dirichlet(1,...,1) draw, i.e. uniform over the simplex.
  Eigen::RowVectorXd next_simplex(int n) {
    Eigen::RowVectorXd x(n);
    for (int i = 0; i < n; ++i) {
      x(i) = -std::log(1.0 - next_unit());
    }
    return x / x.sum();
  }

 private:
  std::uint64_t state_;
};

}  // namespace pmdlab
