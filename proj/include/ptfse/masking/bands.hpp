#pragma once

#include <array>
#include <string>

#include "ptfse/errors.hpp"

namespace ptfse::masking {

// Half-open bin interval [begin, end).
struct BinRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t width() const { return end - begin; }
  bool contains(std::size_t k) const { return k >= begin && k < end; }
  friend bool operator==(const BinRange&, const BinRange&) = default;
};

// Low / mid / high split of the one-sided spectrum with per-band pooling
// steps and loss weights.
struct BandPartition {
  std::array<BinRange, 3> ranges;
  std::array<std::size_t, 3> pool_steps{1, 2, 4};
  std::array<double, 3> weights{1.0, 1.0, 1.0};

  const BinRange& lf() const { return ranges[0]; }
  const BinRange& mf() const { return ranges[1]; }
  const BinRange& hf() const { return ranges[2]; }
  std::size_t bins() const { return ranges[2].end; }

  // Throws InvalidConfig unless the ranges tile [0, F) and each band width
  // is divisible by its pool step.
  void validate() const {
    if (ranges[0].begin != 0) throw InvalidConfig("band partition must start at bin 0");
    for (std::size_t b = 0; b < 3; ++b) {
      if (ranges[b].end <= ranges[b].begin) throw InvalidConfig("band " + std::to_string(b) + " is empty");
      if (b > 0 && ranges[b].begin != ranges[b - 1].end) throw InvalidConfig("band ranges are not contiguous");
      if (pool_steps[b] == 0 || ranges[b].width() % pool_steps[b] != 0)
        throw InvalidConfig("band " + std::to_string(b) + " width " + std::to_string(ranges[b].width()) +
                            " not divisible by pool step " + std::to_string(pool_steps[b]));
    }
  }
};

// Splits F = n_fft/2+1 bins at fs/4 and 3fs/8 (bin k sits at k*fs/n_fft Hz;
// a bin exactly on an edge belongs to the lower band). If the mid or high
// width is not divisible by its pool step, the corresponding upper boundary
// moves down by one bin.
inline BandPartition band_partition(std::size_t freq_bins, int n_fft, int fs) {
  if (n_fft <= 0 || freq_bins != static_cast<std::size_t>(n_fft / 2 + 1))
    throw InvalidConfig("band_partition: F=" + std::to_string(freq_bins) + " does not match n_fft=" + std::to_string(n_fft));
  if (fs <= 0) throw InvalidConfig("band_partition: sample rate must be positive");
  // Largest bin with k*fs/n_fft <= edge, computed exactly in integers.
  auto last_bin_at_or_below = [&](long num, long den) {  // edge = fs*num/den
    return static_cast<std::size_t>((static_cast<long>(n_fft) * num) / den);
  };
  std::size_t lf_end = last_bin_at_or_below(1, 4) + 1;
  std::size_t mf_end = last_bin_at_or_below(3, 8) + 1;
  if (freq_bins < 7 || lf_end >= mf_end || mf_end >= freq_bins)
    throw InvalidConfig("band_partition: F=" + std::to_string(freq_bins) + " too small for three non-empty bands");

  if ((freq_bins - mf_end) % 4 != 0) --mf_end;
  if ((mf_end - lf_end) % 2 != 0) --lf_end;

  BandPartition p;
  p.ranges = {BinRange{0, lf_end}, BinRange{lf_end, mf_end}, BinRange{mf_end, freq_bins}};
  try {
    p.validate();
  } catch (const InvalidConfig& e) {
    throw InvalidConfig("band_partition: F=" + std::to_string(freq_bins) +
                        " admits no partition with pool steps (1,2,4) within one-bin boundary moves: " + e.what());
  }
  return p;
}

}  // namespace ptfse::masking
