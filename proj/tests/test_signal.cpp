#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ptfse/metrics/si_sdr.hpp"
#include "ptfse/rng.hpp"
#include "ptfse/signal/mix.hpp"
#include "ptfse/signal/stft.hpp"
#include "ptfse/signal/synth.hpp"
#include "ptfse/signal/wav.hpp"

using namespace ptfse;
using signal::ClipKind;
using signal::Waveform;

namespace {

Waveform noise_clip(std::size_t n, std::uint64_t seed, double amp = 1.0) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (double& v : w.samples) v = rng.uniform(-amp, amp);
  return w;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Direct DFT of one periodic-Hann-windowed, centre-padded frame.
std::vector<std::complex<double>> direct_frame_dft(const Waveform& w, std::size_t t, int n_fft, int hop) {
  const double pi = std::numbers::pi;
  std::vector<std::complex<double>> out(n_fft / 2 + 1);
  for (int k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < n_fft; ++n) {
      const long idx = static_cast<long>(t) * hop + n - n_fft / 2;
      const double x = idx >= 0 && idx < static_cast<long>(w.size()) ? w.samples[idx] : 0.0;
      const double win = 0.5 - 0.5 * std::cos(2 * pi * n / n_fft);
      acc += x * win * std::polar(1.0, -2 * pi * k * n / n_fft);
    }
    out[k] = acc;
  }
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ptfse_test_signal";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_raw_wav(const std::filesystem::path& p, int channels, int rate, int bits, int format = 1) {
  auto bytes = signal::encode_wav(Waveform{std::vector<double>(64, 0.1)});
  auto put16 = [&](std::size_t at, int v) {
    bytes[at] = v & 0xff;
    bytes[at + 1] = (v >> 8) & 0xff;
  };
  put16(20, format);
  put16(22, channels);
  bytes[24] = rate & 0xff;
  bytes[25] = (rate >> 8) & 0xff;
  bytes[26] = (rate >> 16) & 0xff;
  bytes[27] = (rate >> 24) & 0xff;
  put16(34, bits);
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace

TEST(Stft, ZeroSignalGivesZeroGrid) {
  const auto s = signal::stft(Waveform{std::vector<double>(16000, 0.0)}, 512, 256);
  EXPECT_EQ(s.bins(), 257u);
  EXPECT_EQ(s.frames(), 63u);
  for (double v : s.real.data()) EXPECT_EQ(v, 0.0);
  for (double v : s.imag.data()) EXPECT_EQ(v, 0.0);
}

TEST(Stft, MatchesDirectDft) {
  const auto w = noise_clip(2000, 3);
  const auto s = signal::stft(w, 64, 16);
  for (std::size_t t : {0u, 7u, static_cast<unsigned>(s.frames() - 1)}) {
    const auto ref = direct_frame_dft(w, t, 64, 16);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_NEAR(s.real(k, t), ref[k].real(), 1e-10);
      EXPECT_NEAR(s.imag(k, t), ref[k].imag(), 1e-10);
    }
  }
}

TEST(Stft, CosineAtBinCentreConcentratesEnergy) {
  Waveform w;
  w.samples.resize(16000);
  for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] = std::cos(2 * std::numbers::pi * 1000.0 * i / 16000.0);
  const auto s = signal::stft(w, 512, 256);
  for (std::size_t t = 2; t + 2 < s.frames(); ++t) {
    double total = 0.0, near32 = 0.0;
    for (std::size_t k = 0; k < s.bins(); ++k) {
      const double e = s.real(k, t) * s.real(k, t) + s.imag(k, t) * s.imag(k, t);
      total += e;
      if (k == 32) near32 = e;
    }
    // The Hann main lobe spreads a bin-centred tone over bins 31..33 in a
    // 1:4:1 amplitude ratio, i.e. 2/3 of the energy at the centre.
    EXPECT_GE(near32 / total, 0.66);
    const auto ref = direct_frame_dft(w, t, 512, 256);
    EXPECT_NEAR(std::norm(ref[32]) / total, near32 / total, 1e-9);
  }
}

TEST(Stft, CosineMainLobeHoldsNinetyFivePercent) {
  Waveform w;
  w.samples.resize(16000);
  for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] = std::cos(2 * std::numbers::pi * 1000.0 * i / 16000.0);
  const auto s = signal::stft(w, 512, 256);
  for (std::size_t t = 2; t + 2 < s.frames(); ++t) {
    double total = 0.0, lobe = 0.0;
    for (std::size_t k = 0; k < s.bins(); ++k) {
      const double e = s.real(k, t) * s.real(k, t) + s.imag(k, t) * s.imag(k, t);
      total += e;
      if (k >= 31 && k <= 33) lobe += e;
    }
    EXPECT_GE(lobe / total, 0.95);
  }
}

TEST(Stft, IsLinear) {
  const auto a = noise_clip(4000, 1), b = noise_clip(4000, 2);
  Waveform c;
  for (std::size_t i = 0; i < a.size(); ++i) c.samples.push_back(0.7 * a.samples[i] - 1.3 * b.samples[i]);
  const auto sa = signal::stft(a, 512, 256), sb = signal::stft(b, 512, 256), sc = signal::stft(c, 512, 256);
  for (std::size_t i = 0; i < sc.real.size(); ++i) {
    const double er = 0.7 * sa.real.data()[i] - 1.3 * sb.real.data()[i];
    const double ei = 0.7 * sa.imag.data()[i] - 1.3 * sb.imag.data()[i];
    EXPECT_LE(std::abs(sc.real.data()[i] - er), 1e-9 * std::max(1.0, std::abs(er)));
    EXPECT_LE(std::abs(sc.imag.data()[i] - ei), 1e-9 * std::max(1.0, std::abs(ei)));
  }
}

TEST(Stft, ShortInputRejected) {
  EXPECT_THROW(signal::stft(Waveform{std::vector<double>(100, 0.0)}, 512, 256), InvalidInput);
  EXPECT_THROW(signal::stft(noise_clip(1000, 1), 512, 200), InvalidConfig);
  EXPECT_THROW(signal::stft(noise_clip(1000, 1), 511, 1), InvalidConfig);
}

TEST(Stft, MagnitudeNonNegative) {
  const auto m = signal::magnitude(signal::stft(noise_clip(3000, 9), 512, 256));
  for (double v : m.values.data()) EXPECT_GE(v, 0.0);
}

TEST(Istft, RoundTripWhiteNoise) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = noise_clip(16000, seed);
    const auto back = signal::istft(signal::stft(w, 512, 256), w.size());
    ASSERT_EQ(back.size(), w.size());
    EXPECT_LE(max_abs_diff(back.samples, w.samples), 1e-6);
  }
}

TEST(Istft, RoundTripOddLengthsAndSmallFrames) {
  for (std::size_t n : {513u, 1000u, 4097u}) {
    const auto w = noise_clip(n, n);
    EXPECT_LE(max_abs_diff(signal::istft(signal::stft(w, 512, 256), n).samples, w.samples), 1e-6);
    EXPECT_LE(max_abs_diff(signal::istft(signal::stft(w, 64, 16), n).samples, w.samples), 1e-6);
  }
}

TEST(Istft, SpeechlikeRoundTripScoresAbove100dB) {
  const auto w = signal::synth_clip(ClipKind::speechlike, 1.0, 4);
  const auto back = signal::istft(signal::stft(w, 512, 256), w.size());
  // The metric caps at 100 dB, so reaching the cap is the pass condition.
  EXPECT_GE(metrics::si_sdr(back, w), 100.0);
}

TEST(Istft, ZeroSpectrogramGivesSilence) {
  signal::ComplexSpectrogram s(257, 10, 512, 256);
  for (double v : signal::istft(s, 2000).samples) EXPECT_EQ(v, 0.0);
}

TEST(Istft, TooLongOutputRejected) {
  signal::ComplexSpectrogram s(257, 10, 512, 256);
  EXPECT_THROW(signal::istft(s, signal::istft_max_length(10, 512, 256) + 1), InvalidInput);
}

TEST(Mix, HandScaleFactors) {
  Waveform one{std::vector<double>{1, -1, 1, -1}};
  Waveform two{std::vector<double>{2, -2, 2, -2}};
  EXPECT_DOUBLE_EQ(signal::mix_at_snr(one, one, 0.0).noise_scale, 1.0);
  EXPECT_DOUBLE_EQ(signal::mix_at_snr(one, two, 0.0).noise_scale, 0.5);
}

TEST(Mix, MeasuredSnrMatchesRequest) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto clean = signal::synth_clip(ClipKind::speechlike, 0.5, trial);
    const auto noise = signal::synth_clip(ClipKind::noise_babble, 0.5, trial);
    const double snr = rng.uniform(0.0, 20.0);
    const auto m = signal::mix_at_snr(clean, noise, snr);
    EXPECT_NEAR(signal::snr_db(clean, m.scaled_noise), snr, 1e-6);
    for (std::size_t i = 0; i < clean.size(); ++i)
      EXPECT_EQ(m.mixture.samples[i], clean.samples[i] + m.scaled_noise.samples[i]);
  }
}

TEST(Mix, ZeroPowerRejected) {
  Waveform zero{std::vector<double>(8, 0.0)}, one{std::vector<double>(8, 1.0)};
  EXPECT_THROW(signal::mix_at_snr(zero, one, 0.0), InvalidInput);
  EXPECT_THROW(signal::mix_at_snr(one, zero, 0.0), InvalidInput);
  EXPECT_THROW(signal::mix_at_snr(one, Waveform{std::vector<double>(4, 1.0)}, 0.0), InvalidInput);
}

TEST(Synth, Deterministic) {
  const auto a = signal::synth_clip(ClipKind::speechlike, 2.0, 7);
  const auto b = signal::synth_clip(ClipKind::speechlike, 2.0, 7);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.size(), 32000u);
  EXPECT_NE(a.samples, signal::synth_clip(ClipKind::speechlike, 2.0, 8).samples);
}

TEST(Synth, WhiteNoiseIsZeroMean) {
  const auto w = signal::synth_clip(ClipKind::noise_white, 1.0, 1);
  double mean = 0.0;
  for (double v : w.samples) mean += v;
  EXPECT_LE(std::abs(mean / w.size()), 0.01);
}

TEST(Synth, PinkNoiseSlopeIsMinusThreeDbPerOctave) {
  const auto w = signal::synth_clip(ClipKind::noise_pink, 1.0, 1);
  const auto s = signal::stft(w, 512, 256);
  // Least-squares fit of 10 log10(mean power) against log2(frequency).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 1; k < s.bins(); ++k) {
    const double f = k * 16000.0 / 512;
    if (f < 100.0 || f > 4000.0) continue;
    double p = 0.0;
    for (std::size_t t = 0; t < s.frames(); ++t) p += s.real(k, t) * s.real(k, t) + s.imag(k, t) * s.imag(k, t);
    const double x = std::log2(f), y = 10 * std::log10(p / s.frames());
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -3.0, 1.0);
}

TEST(Synth, AllKindsBoundedAndFinite) {
  for (auto kind : {ClipKind::speechlike, ClipKind::noise_white, ClipKind::noise_pink, ClipKind::noise_babble}) {
    const auto w = signal::synth_clip(kind, 0.5, 3);
    EXPECT_EQ(w.size(), 8000u);
    for (double v : w.samples) {
      ASSERT_TRUE(std::isfinite(v));
      ASSERT_LE(std::abs(v), 1.0);
    }
    EXPECT_GT(signal::power(w.samples), 0.0);
  }
  EXPECT_THROW(signal::synth_clip(ClipKind::speechlike, 0.0, 1), InvalidInput);
}

TEST(Wav, RampRoundTripWithinOneLsb) {
  Waveform ramp;
  for (int i = 0; i < 16000; ++i) ramp.samples.push_back(-1.0 + 2.0 * i / 15999.0);
  const auto p = temp_path("ramp.wav");
  signal::write_wav(p, ramp);
  const auto back = signal::read_wav(p);
  ASSERT_EQ(back.size(), ramp.size());
  EXPECT_EQ(back.sample_rate, 16000);
  EXPECT_LE(max_abs_diff(back.samples, ramp.samples), 3.1e-5);
}

TEST(Wav, OutOfRangeSamplesClamped) {
  const auto bytes = signal::encode_wav(Waveform{std::vector<double>{2.0, -3.0}});
  const auto back = signal::decode_wav(bytes);
  EXPECT_NEAR(back.samples[0], 1.0, 3.1e-5);
  EXPECT_EQ(back.samples[1], -1.0);
}

TEST(Wav, UnsupportedFormatsNameTheField) {
  auto expect_error = [](const std::filesystem::path& p, const std::string& field) {
    try {
      signal::read_wav(p);
      ADD_FAILURE() << "no error for " << p;
    } catch (const UnsupportedFormat& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  write_raw_wav(temp_path("stereo.wav"), 2, 16000, 16);
  expect_error(temp_path("stereo.wav"), "channels=2");
  write_raw_wav(temp_path("8k.wav"), 1, 8000, 16);
  expect_error(temp_path("8k.wav"), "sample_rate=8000");
  write_raw_wav(temp_path("float.wav"), 1, 16000, 32, 3);
  expect_error(temp_path("float.wav"), "audio_format=3");
  write_raw_wav(temp_path("8bit.wav"), 1, 16000, 8);
  expect_error(temp_path("8bit.wav"), "bits_per_sample=8");
  std::ofstream(temp_path("junk.wav")) << "hello";
  expect_error(temp_path("junk.wav"), "RIFF");
  EXPECT_THROW(signal::read_wav(temp_path("does_not_exist.wav")), IoError);
}
