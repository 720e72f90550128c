#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ptfse/errors.hpp"
#include "ptfse/signal/types.hpp"

namespace ptfse::masking {

using signal::ComplexSpectrogram;
using signal::Grid;

inline constexpr double kDenominatorFloor = 1e-10;
inline constexpr double kCompressBound = 10.0;   // K
inline constexpr double kCompressSlope = 0.1;    // C
inline constexpr double kDecompressMargin = 1e-6;

// Complex ratio mask on the F x T grid of a spectrogram.
struct ComplexMask {
  Grid<double> real;
  Grid<double> imag;
  bool compressed = false;

  std::size_t bins() const { return real.rows(); }
  std::size_t frames() const { return real.cols(); }
};

// Complex ideal ratio mask M = S / Y.
inline ComplexMask cirm(const ComplexSpectrogram& noisy, const ComplexSpectrogram& clean) {
  if (!noisy.real.same_shape(clean.real) || !noisy.imag.same_shape(clean.imag) || !noisy.real.same_shape(noisy.imag))
    throw ShapeError("cirm: noisy " + noisy.shape() + " vs clean " + clean.shape());
  ComplexMask m{Grid<double>(noisy.bins(), noisy.frames()), Grid<double>(noisy.bins(), noisy.frames()), false};
  for (std::size_t i = 0; i < m.real.size(); ++i) {
    const double yr = noisy.real.data()[i], yi = noisy.imag.data()[i];
    const double sr = clean.real.data()[i], si = clean.imag.data()[i];
    const double den = std::max(yr * yr + yi * yi, kDenominatorFloor);
    m.real.data()[i] = (yr * sr + yi * si) / den;
    m.imag.data()[i] = (yr * si - yi * sr) / den;
  }
  return m;
}

// g(x) = K (1 - e^{-Cx}) / (1 + e^{-Cx}), written as K tanh(Cx/2).
inline double compress_value(double x) { return kCompressBound * std::tanh(0.5 * kCompressSlope * x); }

inline double decompress_value(double y) {
  const double lim = kCompressBound - kDecompressMargin;
  const double c = std::clamp(y, -lim, lim);
  return -std::log((kCompressBound - c) / (kCompressBound + c)) / kCompressSlope;
}

inline ComplexMask compress_mask(const ComplexMask& m) {
  if (m.compressed) throw ContractError("compress_mask: mask is already compressed");
  ComplexMask out = m;
  for (auto& v : out.real.data()) v = compress_value(v);
  for (auto& v : out.imag.data()) v = compress_value(v);
  out.compressed = true;
  return out;
}

inline ComplexMask decompress_mask(const ComplexMask& m) {
  if (!m.compressed) throw ContractError("decompress_mask: mask is not compressed");
  ComplexMask out = m;
  for (auto& v : out.real.data()) v = decompress_value(v);
  for (auto& v : out.imag.data()) v = decompress_value(v);
  out.compressed = false;
  return out;
}

// Per-bin complex product M * Y.
inline ComplexSpectrogram apply_mask(const ComplexSpectrogram& noisy, const ComplexMask& m) {
  if (m.compressed) throw ContractError("apply_mask: mask is compressed; decompress it first");
  if (!noisy.real.same_shape(m.real) || !m.real.same_shape(m.imag))
    throw ShapeError("apply_mask: spectrogram " + noisy.shape() + " vs mask " +
                     signal::shape_string(m.bins(), m.frames()));
  ComplexSpectrogram out = noisy;
  for (std::size_t i = 0; i < m.real.size(); ++i) {
    const double yr = noisy.real.data()[i], yi = noisy.imag.data()[i];
    const double mr = m.real.data()[i], mi = m.imag.data()[i];
    out.real.data()[i] = mr * yr - mi * yi;
    out.imag.data()[i] = mr * yi + mi * yr;
  }
  return out;
}

}  // namespace ptfse::masking
