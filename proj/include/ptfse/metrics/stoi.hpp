#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "ptfse/errors.hpp"
#include "ptfse/signal/types.hpp"

// Classic short-time objective intelligibility (Taal et al.), following the
// widely used Python port constant for constant so scores are comparable.
namespace ptfse::metrics {

namespace stoi_detail {

inline constexpr int kFs = 10000;
inline constexpr int kFrame = 256;
inline constexpr int kNfft = 512;
inline constexpr int kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr int kSegment = 30;
inline constexpr double kBeta = -15.0;
inline constexpr double kDynRange = 40.0;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// Anti-aliasing FIR in the style of Octave's resample(): Kaiser-windowed
// sinc, 60 dB rejection, normalized to unit DC gain.
inline std::vector<double> resample_window(int up, int down) {
  const double stopband_cutoff = 1.0 / (2.0 * std::max(up, down));
  const double roll_off = stopband_cutoff / 10.0;
  const double rejection_db = 60.0;
  const long L = static_cast<long>(std::ceil((rejection_db - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  const long M = 2 * L + 1;
  std::vector<double> h(static_cast<std::size_t>(M));
  double total = 0.0;
  for (long n = 0; n < M; ++n) {
    const double t = static_cast<double>(n - L);
    const double arg = 2.0 * stopband_cutoff * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double ideal = 2.0 * up * stopband_cutoff * sinc;
    const double r = 2.0 * static_cast<double>(n) / static_cast<double>(M - 1) - 1.0;
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[n] = kaiser * ideal;
    total += h[n];
  }
  for (double& v : h) v /= total;
  return h;
}

// Polyphase rational resampling by up/down with the given FIR, aligned the
// same way as scipy.signal.resample_poly.
inline std::vector<double> resample_poly(std::span<const double> x, int up, int down, std::vector<double> h) {
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  for (double& v : h) v *= up;
  const long half_len = static_cast<long>((h.size() - 1) / 2);
  const long n_in = static_cast<long>(x.size());
  const long n_out = (n_in * up) / down + ((n_in * up) % down != 0 ? 1 : 0);
  const long pre_pad = down - half_len % down;
  const long pre_remove = (half_len + pre_pad) / down;
  const long taps = static_cast<long>(h.size());

  std::vector<double> y(static_cast<std::size_t>(n_out));
  for (long i = 0; i < n_out; ++i) {
    const long m0 = (i + pre_remove) * down - pre_pad;  // position in the upsampled stream for tap 0
    double acc = 0.0;
    // Only taps landing on an original sample (m0 - k divisible by up) contribute.
    long k = ((m0 % up) + up) % up;
    for (; k < taps; k += up) {
      const long m = m0 - k;
      if (m < 0) break;
      const long src = m / up;
      if (src < n_in) acc += h[k] * x[src];
    }
    y[i] = acc;
  }
  return y;
}

inline std::vector<double> hanning_inner(int n) {
  // numpy.hanning(n + 2)[1:-1]
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  return w;
}

inline std::size_t frame_count(std::size_t len) {
  if (len <= static_cast<std::size_t>(kFrame)) return 0;
  return (len - kFrame + (kFrame / 2) - 1) / (kFrame / 2);
}

// Drops frames whose clean-signal energy is more than kDynRange below the
// loudest one, then overlap-adds the surviving windowed frames.
inline void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = hanning_inner(kFrame);
  const int hop = kFrame / 2;
  const std::size_t frames = frame_count(x.size());
  std::vector<double> energy(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int n = 0; n < kFrame; ++n) {
      const double v = w[n] * x[f * hop + n];
      acc += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(acc) + kEps);
  }
  const double peak = frames ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < frames; ++f)
    if (peak - kDynRange - energy[f] < 0.0) keep.push_back(f);

  const std::size_t out_len = keep.empty() ? 0 : (keep.size() - 1) * hop + kFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j)
    for (int n = 0; n < kFrame; ++n) {
      xo[j * hop + n] += w[n] * x[keep[j] * hop + n];
      yo[j * hop + n] += w[n] * y[keep[j] * hop + n];
    }
  x = std::move(xo);
  y = std::move(yo);
}

// One-third octave band energies: [bands][frames].
inline std::vector<std::vector<double>> third_octave_envelopes(const std::vector<double>& x) {
  const auto w = hanning_inner(kFrame);
  const int hop = kFrame / 2;
  const std::size_t frames = frame_count(x.size());
  const int bins = kNfft / 2 + 1;

  // Band edges snapped to the nearest FFT bin (first on ties).
  std::vector<int> lo(kBands), hi(kBands);
  auto nearest_bin = [&](double freq) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < bins; ++k) {
      const double fk = static_cast<double>(kFs) * k / kNfft;
      const double d = (fk - freq) * (fk - freq);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  for (int b = 0; b < kBands; ++b) {
    lo[b] = nearest_bin(kMinFreq * std::pow(2.0, (2.0 * b - 1.0) / 6.0));
    hi[b] = nearest_bin(kMinFreq * std::pow(2.0, (2.0 * b + 1.0) / 6.0));
  }

  std::vector<std::vector<double>> env(kBands, std::vector<double>(frames));
  Eigen::FFT<double> fft;
  std::vector<double> buf(kNfft);
  std::vector<std::complex<double>> spec;
  std::vector<double> power(bins);
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < kFrame; ++n) buf[n] = w[n] * x[f * hop + n];
    fft.fwd(spec, buf);
    for (int k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
    for (int b = 0; b < kBands; ++b) {
      double acc = 0.0;
      for (int k = lo[b]; k < hi[b]; ++k) acc += power[k];
      env[b][f] = std::sqrt(acc);
    }
  }
  return env;
}

}  // namespace stoi_detail

// Resamples to 10 kHz using the STOI anti-aliasing filter.
inline std::vector<double> resample_to_stoi_rate(std::span<const double> x, int fs) {
  if (fs == stoi_detail::kFs) return {x.begin(), x.end()};
  const int g = std::gcd(stoi_detail::kFs, fs);
  const int up = stoi_detail::kFs / g, down = fs / g;
  return stoi_detail::resample_poly(x, up, down, stoi_detail::resample_window(up, down));
}

// STOI of `est` against the clean reference `ref`, in [-1, 1].
inline double stoi(std::span<const double> est, std::span<const double> ref, int fs) {
  using namespace stoi_detail;
  if (est.size() != ref.size())
    throw InvalidInput("stoi: lengths differ (" + std::to_string(est.size()) + " vs " + std::to_string(ref.size()) + ")");
  if (fs <= 0) throw InvalidInput("stoi: sample rate must be positive");
  const double segment_seconds = static_cast<double>(kSegment * kFrame / 2 + kFrame) / kFs;
  if (static_cast<double>(ref.size()) / fs < segment_seconds)
    throw InvalidInput("stoi: clip of " + std::to_string(static_cast<double>(ref.size()) / fs) +
                       " s is shorter than one analysis segment");

  std::vector<double> x = resample_to_stoi_rate(ref, fs);
  std::vector<double> y = resample_to_stoi_rate(est, fs);
  remove_silent_frames(x, y);
  const auto xe = third_octave_envelopes(x);
  const auto ye = third_octave_envelopes(y);
  const std::size_t frames = xe[0].size();
  if (frames < static_cast<std::size_t>(kSegment))
    throw InvalidInput("stoi: only " + std::to_string(frames) + " non-silent frames, need " + std::to_string(kSegment));

  const double clip = std::pow(10.0, -kBeta / 20.0);
  const std::size_t segments = frames - kSegment + 1;
  double total = 0.0;
  std::vector<double> xs(kSegment), ys(kSegment);
  for (std::size_t m = 0; m < segments; ++m) {
    for (int b = 0; b < kBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        xs[j] = xe[b][m + j];
        ys[j] = ye[b][m + j];
        nx += xs[j] * xs[j];
        ny += ys[j] * ys[j];
      }
      const double gain = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        ys[j] = std::min(ys[j] * gain, xs[j] * (1.0 + clip));
        mx += xs[j];
        my += ys[j];
      }
      mx /= kSegment;
      my /= kSegment;
      double sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        xs[j] -= mx;
        ys[j] -= my;
        sxx += xs[j] * xs[j];
        syy += ys[j] * ys[j];
      }
      const double dx = std::sqrt(sxx) + kEps, dy = std::sqrt(syy) + kEps;
      for (int j = 0; j < kSegment; ++j) sxy += (xs[j] / dx) * (ys[j] / dy);
      total += sxy;
    }
  }
  return total / static_cast<double>(segments * kBands);
}

inline double stoi(const signal::Waveform& est, const signal::Waveform& ref) {
  return stoi(std::span<const double>(est.samples), std::span<const double>(ref.samples), ref.sample_rate);
}

}  // namespace ptfse::metrics
