#pragma once

#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "ptfse/errors.hpp"
#include "ptfse/signal/types.hpp"

namespace ptfse::signal {

// Periodic Hann window of length n.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

inline std::size_t stft_frame_count(std::size_t num_samples, int n_fft, int hop) {
  const std::size_t padded = num_samples + static_cast<std::size_t>(n_fft);
  return 1 + (padded - n_fft) / hop;
}

namespace detail {

inline void check_stft_geometry(int n_fft, int hop) {
  if (n_fft <= 0 || n_fft % 2 != 0)
    throw InvalidConfig("n_fft must be a positive even integer, got " + std::to_string(n_fft));
  if (hop <= 0 || n_fft % hop != 0)
    throw InvalidConfig("hop must divide n_fft, got hop=" + std::to_string(hop) +
                        " n_fft=" + std::to_string(n_fft));
}

}  // namespace detail

// Centered STFT: the input is zero-padded by n_fft/2 at both ends so frame t
// is centered on sample t*hop.
inline ComplexSpectrogram stft(const Waveform& w, int n_fft, int hop) {
  detail::check_stft_geometry(n_fft, hop);
  if (w.size() < static_cast<std::size_t>(n_fft))
    throw InvalidInput("waveform has " + std::to_string(w.size()) +
                       " samples, shorter than one frame of " + std::to_string(n_fft));

  const std::size_t half = static_cast<std::size_t>(n_fft / 2);
  const std::size_t frames = stft_frame_count(w.size(), n_fft, hop);
  const std::size_t bins = half + 1;
  const auto window = hann_window(n_fft);

  ComplexSpectrogram out(bins, frames, n_fft, hop);
  Eigen::FFT<double> fft;
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spectrum;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;  // index into the padded signal
    for (int n = 0; n < n_fft; ++n) {
      const std::size_t p = start + n;
      const double x = (p >= half && p - half < w.size()) ? w.samples[p - half] : 0.0;
      frame[n] = x * window[n];
    }
    fft.fwd(spectrum, frame);
    for (std::size_t k = 0; k < bins; ++k) {
      out.real(k, t) = spectrum[k].real();
      out.imag(k, t) = spectrum[k].imag();
    }
  }
  return out;
}

// Largest output length istft can synthesize from `frames` frames.
inline std::size_t istft_max_length(std::size_t frames, int n_fft, int hop) {
  if (frames == 0) return 0;
  return (frames - 1) * static_cast<std::size_t>(hop) + static_cast<std::size_t>(n_fft / 2);
}

// Weighted overlap-add inverse, normalized by the summed squared window.
inline Waveform istft(const ComplexSpectrogram& s, std::size_t out_len) {
  detail::check_stft_geometry(s.n_fft, s.hop);
  const int n_fft = s.n_fft;
  const std::size_t half = static_cast<std::size_t>(n_fft / 2);
  if (s.bins() != half + 1)
    throw ShapeError("spectrogram has " + std::to_string(s.bins()) + " bins, expected " +
                     std::to_string(half + 1) + " for n_fft=" + std::to_string(n_fft));
  if (!s.real.same_shape(s.imag)) throw ShapeError("real/imag planes differ in shape");
  const std::size_t max_len = istft_max_length(s.frames(), n_fft, s.hop);
  if (out_len > max_len)
    throw InvalidInput("requested " + std::to_string(out_len) + " samples but only " +
                       std::to_string(max_len) + " are synthesizable");

  const auto window = hann_window(n_fft);
  const std::size_t padded_len = (s.frames() - 1) * s.hop + n_fft;
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> norm(padded_len, 0.0);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum(n_fft);
  std::vector<std::complex<double>> frame;
  for (std::size_t t = 0; t < s.frames(); ++t) {
    for (std::size_t k = 0; k <= half; ++k) spectrum[k] = {s.real(k, t), s.imag(k, t)};
    // DC and Nyquist of a real signal carry no imaginary part.
    spectrum[0].imag(0.0);
    spectrum[half].imag(0.0);
    for (std::size_t k = 1; k < half; ++k) spectrum[n_fft - k] = std::conj(spectrum[k]);
    fft.inv(frame, spectrum);
    const std::size_t start = t * s.hop;
    for (int n = 0; n < n_fft; ++n) {
      acc[start + n] += frame[n].real() * window[n];
      norm[start + n] += window[n] * window[n];
    }
  }

  Waveform out;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t p = i + half;
    out.samples[i] = norm[p] > 1e-10 ? acc[p] / norm[p] : 0.0;
  }
  return out;
}

}  // namespace ptfse::signal
