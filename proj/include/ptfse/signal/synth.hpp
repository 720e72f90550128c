#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "ptfse/errors.hpp"
#include "ptfse/rng.hpp"
#include "ptfse/signal/types.hpp"

namespace ptfse::signal {

enum class ClipKind { speechlike, noise_white, noise_pink, noise_babble };

inline std::string_view to_string(ClipKind k) {
  switch (k) {
    case ClipKind::speechlike: return "speechlike";
    case ClipKind::noise_white: return "noise_white";
    case ClipKind::noise_pink: return "noise_pink";
    case ClipKind::noise_babble: return "noise_babble";
  }
  return "?";
}

inline std::optional<ClipKind> parse_clip_kind(std::string_view s) {
  for (auto k : {ClipKind::speechlike, ClipKind::noise_white, ClipKind::noise_pink, ClipKind::noise_babble})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, ClipKind kind) {
  // splitmix64 finalizer over (seed, kind)
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(kind) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline void scale_to_rms(std::vector<double>& x, double rms) {
  const double p = power(x);
  if (p <= 0.0) return;
  const double g = rms / std::sqrt(p);
  for (double& v : x) v = std::clamp(v * g, -1.0, 1.0);
}

// Harmonic source with syllable-rate amplitude gating and slow pitch drift.
inline std::vector<double> speechlike(std::size_t n, Rng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double fs = kSampleRate;
  const double f0 = rng.uniform(100.0, 220.0);
  const double drift_rate = rng.uniform(0.5, 3.0);
  const double drift_phase = rng.uniform(0.0, two_pi);
  const int harmonics = 3 + static_cast<int>(rng.index(3));
  std::vector<double> amp(harmonics);
  for (int k = 0; k < harmonics; ++k) amp[k] = rng.uniform(0.6, 1.0) / (k + 1);
  const double syllable_rate = rng.uniform(2.5, 4.5);
  const double syllable_phase = rng.uniform(0.0, two_pi);
  const double phrase_phase = rng.uniform(0.0, two_pi);

  std::vector<double> x(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / fs;
    const double f = f0 * (1.0 + 0.08 * std::sin(two_pi * drift_rate * t + drift_phase));
    phase += two_pi * f / fs;
    const double gate = std::max(0.0, std::sin(two_pi * syllable_rate * t + syllable_phase));
    const double env = std::pow(gate, 1.5) * (0.6 + 0.4 * std::sin(two_pi * 0.3 * t + phrase_phase));
    double v = 0.0;
    for (int k = 0; k < harmonics; ++k) v += amp[k] * std::sin((k + 1) * phase);
    x[i] = env * v;
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : x) v *= 0.5 / peak;
  return x;
}

inline std::vector<double> white(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  scale_to_rms(x, 0.1);
  return x;
}

// 1/f power spectrum by shaping white noise in the frequency domain.
inline std::vector<double> pink(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  fft.fwd(spec, x);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
  fft.inv(x, spec, n);
  scale_to_rms(x, 0.1);
  return x;
}

}  // namespace detail

// Deterministic synthetic clip for the given (kind, seconds, seed).
inline Waveform synth_clip(ClipKind kind, double seconds, std::uint64_t seed) {
  if (!(seconds > 0.0)) throw InvalidInput("seconds must be positive");
  const auto n = static_cast<std::size_t>(std::llround(seconds * kSampleRate));
  Rng rng(detail::mix_seed(seed, kind));
  Waveform w;
  switch (kind) {
    case ClipKind::speechlike:
      w.samples = detail::speechlike(n, rng);
      break;
    case ClipKind::noise_white:
      w.samples = detail::white(n, rng);
      break;
    case ClipKind::noise_pink:
      w.samples = detail::pink(n, rng);
      break;
    case ClipKind::noise_babble: {
      w.samples.assign(n, 0.0);
      for (int talker = 0; talker < 5; ++talker) {
        const auto voice = detail::speechlike(n, rng);
        for (std::size_t i = 0; i < n; ++i) w.samples[i] += voice[i];
      }
      detail::scale_to_rms(w.samples, 0.1);
      break;
    }
  }
  return w;
}

}  // namespace ptfse::signal
