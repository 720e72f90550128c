#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ptfse/masking/loss.hpp"
#include "ptfse/model/config.hpp"
#include "ptfse/model/modules.hpp"
#include "ptfse/signal/types.hpp"

namespace ptfse::model {

using masking::MaskTensor;

// Frame-major [T, F] tensor from an F x T magnitude spectrogram.
template <typename T>
Tensor<T> frames_from(const signal::MagnitudeSpectrogram& m) {
  const std::size_t F = m.bins(), frames = m.frames();
  std::vector<T> v(frames * F);
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t t = 0; t < frames; ++t) v[t * F + f] = static_cast<T>(m.values(f, t));
  return Tensor<T>({frames, F}, std::move(v));
}

// Divides frame t by the running mean magnitude over frames 0..t and all
// bins. Causal; the mask targets are invariant to input scale so only the
// network input is normalized.
template <typename T>
Tensor<T> running_mean_normalize(const Tensor<T>& x) {
  const std::size_t frames = x.dim(0), F = x.dim(1);
  std::vector<T> out(x.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < F; ++f) acc += static_cast<double>(x.values()[t * F + f]);
    const double mu = acc / static_cast<double>((t + 1) * F);
    const T inv = static_cast<T>(1.0 / (mu + 1e-5));
    for (std::size_t f = 0; f < F; ++f) out[t * F + f] = x.values()[t * F + f] * inv;
  }
  return Tensor<T>(x.shape(), std::move(out));
}

// Appends `count` zero frames.
template <typename T>
Tensor<T> pad_frames(const Tensor<T>& x, std::size_t count) {
  if (count == 0) return x;
  std::vector<T> v(x.values().begin(), x.values().end());
  v.resize(v.size() + count * x.dim(1), T{0});
  return Tensor<T>({x.dim(0) + count, x.dim(1)}, std::move(v));
}

// The complete enhancement network. T is the arithmetic type (float for
// training, double for gradient checks).
template <typename T>
class PtFse {
 public:
  PtFse(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t F = cfg_.freq_bins();
    // Each block draws from its own stream so toggling one block leaves the
    // initialization of the others unchanged.
    auto stream = [seed](std::uint64_t id) { return Rng(seed * 0x9E3779B97F4A7C15ULL + id); };
    if (cfg_.enable_f_trans) {
      Rng rng = stream(1);
      ftrans_ = FTransParams<T>::create(params_, F, cfg_.ftrans_kernel, rng);
    }
    if (cfg_.enable_t_trans) {
      Rng rng = stream(2);
      ttrans_ = TTransParams<T>::create(params_, F, cfg_.ttrans_hidden, cfg_.ttrans_fc, rng);
    }
    Rng full_rng = stream(3);
    gfull_ = GFullParams<T>::create(params_, F, cfg_.full_hidden, cfg_.full_layers, full_rng);
    Rng sub_rng = stream(4);
    gsub_ = GSubParams<T>::create(params_, cfg_.subband_width(), cfg_.sub_hidden, cfg_.sub_layers, sub_rng);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  const std::optional<FTransParams<T>>& f_trans() const { return ftrans_; }
  const std::optional<TTransParams<T>>& t_trans() const { return ttrans_; }
  const GFullParams<T>& g_full() const { return gfull_; }
  const GSubParams<T>& g_sub() const { return gsub_; }

  // Network input after normalization and look-ahead padding, [T + tau, F].
  Tensor<T> prepare_input(const Tensor<T>& magnitude) const {
    detail::require_frames(magnitude, cfg_.freq_bins(), "pt_fse");
    if (magnitude.dim(0) <= cfg_.look_ahead)
      throw InvalidInput("pt_fse: " + std::to_string(magnitude.dim(0)) + " frames do not exceed the look-ahead of " +
                         std::to_string(cfg_.look_ahead));
    const Tensor<T> x = cfg_.input_norm ? running_mean_normalize(magnitude) : magnitude.detach();
    return pad_frames(x, cfg_.look_ahead);
  }

  // Compressed complex mask [2, T, |bins|] for a [T, F] magnitude input.
  // Only the selected bins run through the sub-band model.
  MaskTensor<T> forward(const Tensor<T>& magnitude, std::vector<std::size_t> bins = {}) const {
    if (bins.empty()) bins = masking::all_bins(cfg_.freq_bins());
    Tensor<T> x = prepare_input(magnitude);
    if (ftrans_) x = f_trans_forward(x, *ftrans_);
    if (ttrans_) x = t_trans_forward(x, *ttrans_);
    const Tensor<T> emb = g_full_forward(x, gfull_);
    const Tensor<T> z = subband_unfold(x, emb, cfg_.context, bins);
    return {g_sub_forward(z, gsub_, cfg_.look_ahead), std::move(bins), true};
  }

  MaskTensor<T> forward(const signal::MagnitudeSpectrogram& m, std::vector<std::size_t> bins = {}) const {
    return forward(frames_from<T>(m), std::move(bins));
  }

 private:
  ModelConfig cfg_;
  ParamStore<T> params_;
  std::optional<FTransParams<T>> ftrans_;
  std::optional<TTransParams<T>> ttrans_;
  GFullParams<T> gfull_;
  GSubParams<T> gsub_;
};

}  // namespace ptfse::model
