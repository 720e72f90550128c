#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>

#include "ptfse/diff/checkpoint.hpp"
#include "ptfse/masking/loss.hpp"
#include "ptfse/metrics/si_sdr.hpp"
#include "ptfse/metrics/stoi.hpp"
#include "ptfse/model/ptfse.hpp"
#include "ptfse/pipeline/dataset.hpp"
#include "ptfse/signal/stft.hpp"

namespace ptfse::pipeline {

// Builds the network for `cfg` and loads `checkpoint` into it.
inline model::PtFse<float> load_model(const model::ModelConfig& cfg, const std::filesystem::path& checkpoint) {
  model::PtFse<float> net(cfg, 0);
  diff::apply_checkpoint(net.params(), diff::read_checkpoint(checkpoint));
  return net;
}

// Resynthesizes `noisy` through an uncompressed mask on its STFT grid.
inline Waveform resynthesize(const Waveform& noisy, const signal::ComplexSpectrogram& spec, const masking::ComplexMask& mask) {
  Waveform out = signal::istft(masking::apply_mask(spec, mask), noisy.size());
  out.sample_rate = noisy.sample_rate;
  return out;
}

// stft -> magnitude -> network -> decompress -> apply -> istft. The mask for
// frame t sees input up to frame t + look_ahead, so the algorithmic latency
// is look_ahead * hop samples; the output has the input's length.
template <typename T>
Waveform enhance(const Waveform& noisy, const model::PtFse<T>& net) {
  const auto& cfg = net.config();
  if (noisy.sample_rate != cfg.sample_rate)
    throw InvalidInput("enhance: input sample rate " + std::to_string(noisy.sample_rate) + " differs from the model's " +
                       std::to_string(cfg.sample_rate));
  const auto spec = signal::stft(noisy, cfg.n_fft, cfg.hop);
  masking::MaskTensor<T> predicted = [&] {
    diff::NoGradGuard no_grad;
    return net.forward(signal::magnitude(spec));
  }();
  const auto mask = masking::decompress_mask(masking::to_mask(predicted));
  Waveform out = resynthesize(noisy, spec, mask);
  for (double& v : out.samples)
    if (!std::isfinite(v)) v = 0.0;
  return out;
}

// Enhancement with the true cIRM in place of the network, optionally passed
// through compression and back.
inline Waveform enhance_oracle(const Waveform& noisy, const Waveform& clean, int n_fft, int hop, bool compressed) {
  const auto spec = signal::stft(noisy, n_fft, hop);
  auto mask = masking::cirm(spec, signal::stft(clean, n_fft, hop));
  if (compressed) mask = masking::decompress_mask(masking::compress_mask(mask));
  return resynthesize(noisy, spec, mask);
}

struct EvalRecord {
  double si_sdr_db = 0.0;
  double stoi = 0.0;
  bool trimmed = false;
  std::string warning;
};

inline std::string eval_line(const EvalRecord& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << "si_sdr_db=" << r.si_sdr_db << " stoi=" << r.stoi;
  return os.str();
}

// Scores `est` against `ref` after trimming both to the shorter length. A
// length difference above 10% of the reference is reported as a warning.
inline EvalRecord evaluate(Waveform est, Waveform ref) {
  if (est.sample_rate != ref.sample_rate)
    throw InvalidInput("evaluate: sample rates differ (" + std::to_string(est.sample_rate) + " vs " +
                       std::to_string(ref.sample_rate) + ")");
  EvalRecord r;
  if (est.size() != ref.size()) {
    const std::size_t n = std::min(est.size(), ref.size());
    const std::size_t diff = std::max(est.size(), ref.size()) - n;
    if (static_cast<double>(diff) > 0.1 * static_cast<double>(ref.size()))
      r.warning = "evaluate: lengths differ by " + std::to_string(diff) + " samples (more than 10%); trimming to " +
                  std::to_string(n);
    est.samples.resize(n);
    ref.samples.resize(n);
    r.trimmed = true;
  }
  r.si_sdr_db = metrics::si_sdr(est, ref);
  r.stoi = metrics::stoi(est, ref);
  return r;
}

}  // namespace ptfse::pipeline
