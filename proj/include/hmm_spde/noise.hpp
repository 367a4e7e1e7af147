#pragma once

// Counter-based Gaussian noise. Every increment is a pure function of its key,
// so replicas can run in any order and still reproduce bit-identical results.
//
// Generation: the key is folded into a 64-bit block seed with SplitMix64
// finalizers; uniforms are the SplitMix64 sequence started at that seed, and
// normals come from Box-Muller pairs (cos branch first, then sin). Changing any
// of these steps changes every regression output.

#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>

#include "hmm_spde/spectral.hpp"

namespace hmm_spde {

/// Independent stream families derived from one master seed.
enum class Stream : std::uint64_t {
  micro = 0,     ///< HMM fast-scale microsolver
  direct = 1,    ///< coupled direct solver
  sampling = 2,  ///< standalone invariant-measure sampling
};

/// Identifies the noise vector zeta_{n,m,j}. Increments of one replica are
/// concatenated across macro steps: the position in the replica's stream is
/// n * steps_per_macro + m. With steps_per_macro == 0 there is no
/// concatenation and (n, m) are hashed as independent coordinates.
struct NoiseStreamKey {
  std::uint64_t master_seed = 0;
  Stream stream = Stream::micro;
  std::uint64_t replica = 1;          // j >= 1
  std::uint64_t macro_step = 0;       // n
  std::uint64_t micro_step = 0;       // m
  std::uint64_t steps_per_macro = 0;  // m_0

  constexpr std::uint64_t global_index() const { return macro_step * steps_per_macro + micro_step; }
};

inline NoiseStreamKey derive_key(std::uint64_t master, std::uint64_t n, std::uint64_t m, std::uint64_t j,
                                 std::uint64_t steps_per_macro = 0, Stream stream = Stream::micro) {
  if (j == 0) throw std::invalid_argument("derive_key: replica index starts at 1");
  if (steps_per_macro != 0 && n > (std::numeric_limits<std::uint64_t>::max() >> 1) / steps_per_macro)
    throw std::overflow_error("derive_key: stream position exceeds 2^63");
  return NoiseStreamKey{master, stream, j, n, m, steps_per_macro};
}

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t block_seed(const NoiseStreamKey& key) {
  std::uint64_t s = mix64(key.master_seed + golden_gamma);
  s = mix64(s ^ (static_cast<std::uint64_t>(key.stream) + golden_gamma));
  s = mix64(s ^ (key.replica * golden_gamma));
  if (key.steps_per_macro == 0) s = mix64(s ^ (key.macro_step + 0x5851f42d4c957f2dULL));
  s = mix64(s ^ (key.global_index() + 0x632be59bd9b4e019ULL));
  return s;
}

/// Uniform in (0, 1], 53-bit resolution.
constexpr double to_unit_open0(std::uint64_t bits) { return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53; }

}  // namespace detail

/// Writes scale * N(0,1) samples determined by the key into out.
inline void fill_gaussian(const NoiseStreamKey& key, double scale, std::span<double> out) {
  const std::uint64_t seed = detail::block_seed(key);
  std::uint64_t counter = 0;
  auto next = [&] { return detail::mix64(seed + (++counter) * detail::golden_gamma); };
  std::size_t i = 0;
  while (i < out.size()) {
    const double u1 = detail::to_unit_open0(next());
    const double u2 = detail::to_unit_open0(next());
    const double r = scale * std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i++] = r * std::cos(angle);
    if (i < out.size()) out[i++] = r * std::sin(angle);
  }
}

/// Brownian increment over a step dt: every mode i.i.d. N(0, dt).
struct NoiseIncrement {
  SpectralField field;
  double dt = 0.0;
};

inline NoiseIncrement draw_increment(const NoiseStreamKey& key, double dt, std::size_t mode_count) {
  if (!(dt > 0.0)) throw std::invalid_argument("draw_increment: dt must be positive");
  if (mode_count == 0) throw std::invalid_argument("draw_increment: K must be >= 1");
  NoiseIncrement inc{SpectralField(mode_count), dt};
  fill_gaussian(key, std::sqrt(dt), inc.field.coeffs());
  return inc;
}

/// Records the macro indices of every key consumed, for measurability checks.
class KeyAudit {
 public:
  void record(const NoiseStreamKey& key) {
    std::lock_guard lock(mutex_);
    if (count_ == 0 || key.macro_step < min_macro_) min_macro_ = key.macro_step;
    if (count_ == 0 || key.macro_step > max_macro_) max_macro_ = key.macro_step;
    ++count_;
  }
  std::uint64_t min_macro() const { return min_macro_; }
  std::uint64_t max_macro() const { return max_macro_; }
  std::uint64_t count() const { return count_; }
  void reset() { count_ = min_macro_ = max_macro_ = 0; }

 private:
  std::mutex mutex_;
  std::uint64_t min_macro_ = 0;
  std::uint64_t max_macro_ = 0;
  std::uint64_t count_ = 0;
};

}  // namespace hmm_spde
