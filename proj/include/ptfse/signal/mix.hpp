#pragma once

#include <cmath>
#include <string>

#include "ptfse/errors.hpp"
#include "ptfse/signal/types.hpp"

namespace ptfse::signal {

struct Mixture {
  Waveform mixture;
  Waveform scaled_noise;
  double noise_scale = 1.0;
};

inline double snr_db(const Waveform& clean, const Waveform& noise) {
  return 10.0 * std::log10(power(clean.samples) / power(noise.samples));
}

// Scales `noise` so that clean/noise power ratio equals snr_db, then adds.
inline Mixture mix_at_snr(const Waveform& clean, const Waveform& noise, double snr) {
  if (clean.size() != noise.size())
    throw InvalidInput("clean has " + std::to_string(clean.size()) + " samples, noise has " +
                       std::to_string(noise.size()));
  if (clean.sample_rate != noise.sample_rate) throw InvalidInput("sample rates differ");
  const double p_clean = power(clean.samples);
  const double p_noise = power(noise.samples);
  if (!(p_clean > 0.0)) throw InvalidInput("clean signal has zero power");
  if (!(p_noise > 0.0)) throw InvalidInput("noise signal has zero power");

  Mixture m;
  m.noise_scale = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr / 10.0)));
  m.scaled_noise.sample_rate = noise.sample_rate;
  m.mixture.sample_rate = clean.sample_rate;
  m.scaled_noise.samples.resize(noise.size());
  m.mixture.samples.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    m.scaled_noise.samples[i] = noise.samples[i] * m.noise_scale;
    m.mixture.samples[i] = clean.samples[i] + m.scaled_noise.samples[i];
  }
  return m;
}

}  // namespace ptfse::signal
