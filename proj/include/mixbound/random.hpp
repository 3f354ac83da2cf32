#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

namespace mixbound {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key for an independent substream of `seed`. Streams are addressed by
/// integer ids so results never depend on evaluation order.
constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Counter-based generator: the i-th draw is a pure function of (key, i).
/// All floating-point transforms are written out here rather than taken from
/// <random>, whose distributions are implementation-defined.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(substream_key(seed, stream)) {}

  std::uint64_t next_u64() noexcept {
    return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open0() noexcept { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one variate per call, no cached state).
  double normal() noexcept {
    const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

  /// Rademacher sign.
  int sign() noexcept { return (next_u64() >> 63) ? 1 : -1; }

  std::uint64_t below(std::uint64_t bound) noexcept { return next_u64() % bound; }

  /// Index drawn from a probability vector by inverse CDF.
  template <typename Derived>
  Eigen::Index categorical(const Eigen::MatrixBase<Derived>& probs) noexcept {
    const double u = uniform();
    double acc = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      if (probs(i) <= 0.0) continue;
      acc += probs(i);
      last_positive = i;
      if (u < acc) return i;
    }
    return last_positive;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mixbound
