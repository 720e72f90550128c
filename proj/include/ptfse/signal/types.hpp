#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptfse/errors.hpp"

namespace ptfse::signal {

inline constexpr int kSampleRate = 16000;

// Mono audio. Amplitudes are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Dense row-major rows x cols matrix.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_shape(const Grid& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

inline std::string shape_string(std::size_t rows, std::size_t cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

// One-sided STFT: bins() = n_fft/2 + 1 rows, frames() columns.
struct ComplexSpectrogram {
  Grid<double> real;
  Grid<double> imag;
  int n_fft = 0;
  int hop = 0;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t bins, std::size_t frames, int n_fft_, int hop_)
      : real(bins, frames), imag(bins, frames), n_fft(n_fft_), hop(hop_) {}

  std::size_t bins() const { return real.rows(); }
  std::size_t frames() const { return real.cols(); }
  std::string shape() const { return shape_string(bins(), frames()); }
};

struct MagnitudeSpectrogram {
  Grid<double> values;

  std::size_t bins() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

inline MagnitudeSpectrogram magnitude(const ComplexSpectrogram& s) {
  MagnitudeSpectrogram m{Grid<double>(s.bins(), s.frames())};
  for (std::size_t i = 0; i < m.values.size(); ++i)
    m.values.data()[i] = std::hypot(s.real.data()[i], s.imag.data()[i]);
  return m;
}

inline double power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace ptfse::signal
