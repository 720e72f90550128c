#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ptfse/errors.hpp"
#include "ptfse/rng.hpp"
#include "ptfse/signal/mix.hpp"
#include "ptfse/signal/stft.hpp"
#include "ptfse/signal/wav.hpp"

namespace ptfse::pipeline {

using signal::Waveform;

struct Clip {
  std::string id;
  Waveform audio;
};

using ClipPool = std::vector<Clip>;

// Every *.wav directly inside `dir`, ordered by file name.
inline ClipPool load_pool(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError(dir.string() + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  ClipPool pool;
  for (const auto& f : files) pool.push_back({f.stem().string(), signal::read_wav(f)});
  return pool;
}

struct MixItem {
  std::string clean_id;
  std::string noise_id;
  double snr_db = 0.0;
  Waveform clean;
  Waveform noisy;
  signal::ComplexSpectrogram clean_spec;
  signal::ComplexSpectrogram noisy_spec;
  signal::MagnitudeSpectrogram noisy_mag;
};

struct MixSettings {
  double snr_min = 0.0;
  double snr_max = 20.0;
  double clip_seconds = 2.0;
  int n_fft = 512;
  int hop = 256;
};

namespace detail {

// `n` samples starting at a random offset; shorter sources are tiled.
inline Waveform crop(const Waveform& src, std::size_t n, Rng& rng) {
  if (src.empty()) throw InvalidInput("empty clip in pool");
  Waveform out;
  out.sample_rate = src.sample_rate;
  out.samples.resize(n);
  const std::size_t start = src.size() > n ? rng.index(src.size() - n + 1) : 0;
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = src.samples[(start + i) % src.size()];
  return out;
}

}  // namespace detail

// One mixture: clean and noise clips, crop and SNR drawn from `rng` in that order.
inline MixItem mix_item(const ClipPool& clean_pool, const ClipPool& noise_pool, const MixSettings& s, Rng& rng) {
  if (clean_pool.empty()) throw InvalidConfig("dynamic mixing: clean pool is empty");
  if (noise_pool.empty()) throw InvalidConfig("dynamic mixing: noise pool is empty");
  if (!(s.snr_min <= s.snr_max)) throw InvalidConfig("dynamic mixing: empty SNR range");
  const Clip& c = clean_pool[rng.index(clean_pool.size())];
  const Clip& n = noise_pool[rng.index(noise_pool.size())];
  const auto len = static_cast<std::size_t>(std::llround(s.clip_seconds * c.audio.sample_rate));
  MixItem item;
  item.clean_id = c.id;
  item.noise_id = n.id;
  item.clean = detail::crop(c.audio, len, rng);
  const Waveform noise = detail::crop(n.audio, len, rng);
  item.snr_db = rng.uniform(s.snr_min, s.snr_max);
  item.noisy = signal::mix_at_snr(item.clean, noise, item.snr_db).mixture;
  item.clean_spec = signal::stft(item.clean, s.n_fft, s.hop);
  item.noisy_spec = signal::stft(item.noisy, s.n_fft, s.hop);
  item.noisy_mag = signal::magnitude(item.noisy_spec);
  return item;
}

inline std::vector<MixItem> dynamic_mix_batch(const ClipPool& clean_pool, const ClipPool& noise_pool,
                                              const MixSettings& s, std::size_t batch_size, Rng& rng) {
  std::vector<MixItem> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(mix_item(clean_pool, noise_pool, s, rng));
  return batch;
}

// Every `groups`-th bin from `offset`.
inline std::vector<std::size_t> drop_band_bins(std::size_t freq_bins, std::size_t groups, std::size_t offset) {
  if (groups == 0 || groups > freq_bins)
    throw InvalidConfig("drop band: groups=" + std::to_string(groups) + " must be in [1, " + std::to_string(freq_bins) + "]");
  if (offset >= groups) throw InvalidConfig("drop band: offset must be below groups");
  std::vector<std::size_t> bins;
  for (std::size_t f = offset; f < freq_bins; f += groups) bins.push_back(f);
  return bins;
}

inline std::vector<std::size_t> drop_band_select(std::size_t freq_bins, std::size_t groups, Rng& rng) {
  if (groups == 0 || groups > freq_bins)
    throw InvalidConfig("drop band: groups=" + std::to_string(groups) + " must be in [1, " + std::to_string(freq_bins) + "]");
  return drop_band_bins(freq_bins, groups, rng.index(groups));
}

}  // namespace ptfse::pipeline
