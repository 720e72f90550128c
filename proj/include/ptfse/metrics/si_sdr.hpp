#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ptfse/errors.hpp"
#include "ptfse/signal/types.hpp"

namespace ptfse::metrics {

inline constexpr double kSiSdrCap = 100.0;

struct SiSdrOptions {
  bool zero_mean = true;
};

// Scale-invariant SDR in dB, clamped to [-cap, +cap].
inline double si_sdr(std::span<const double> est, std::span<const double> ref, SiSdrOptions opt = {}) {
  if (est.size() != ref.size())
    throw InvalidInput("si_sdr: lengths differ (" + std::to_string(est.size()) + " vs " + std::to_string(ref.size()) + ")");
  if (ref.empty()) throw InvalidInput("si_sdr: empty signals");
  const std::size_t n = ref.size();
  double mean_e = 0.0, mean_r = 0.0;
  if (opt.zero_mean) {
    for (std::size_t i = 0; i < n; ++i) {
      mean_e += est[i];
      mean_r += ref[i];
    }
    mean_e /= static_cast<double>(n);
    mean_r /= static_cast<double>(n);
  }
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ref[i] - mean_r;
    dot += (est[i] - mean_e) * r;
    ref_energy += r * r;
  }
  if (!(ref_energy > 0.0)) throw InvalidInput("si_sdr: reference has zero energy");
  const double alpha = dot / ref_energy;
  double target_energy = 0.0, error_energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = alpha * (ref[i] - mean_r);
    const double err = target - (est[i] - mean_e);
    target_energy += target * target;
    error_energy += err * err;
  }
  if (target_energy == 0.0) return -kSiSdrCap;
  if (error_energy == 0.0) return kSiSdrCap;
  return std::clamp(10.0 * std::log10(target_energy / error_energy), -kSiSdrCap, kSiSdrCap);
}

inline double si_sdr(const signal::Waveform& est, const signal::Waveform& ref, SiSdrOptions opt = {}) {
  return si_sdr(std::span<const double>(est.samples), std::span<const double>(ref.samples), opt);
}

}  // namespace ptfse::metrics
