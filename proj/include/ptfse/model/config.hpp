#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ptfse/errors.hpp"

namespace ptfse::model {

// Architecture hyperparameters. Defaults are the full-size system.
struct ModelConfig {
  int n_fft = 512;
  int hop = 256;
  int sample_rate = 16000;
  std::size_t look_ahead = 2;       // frames of future context per mask frame
  std::size_t context = 15;         // sub-band neighbours per side
  std::size_t full_hidden = 512;
  std::size_t full_layers = 2;
  std::size_t sub_hidden = 384;
  std::size_t sub_layers = 2;
  std::size_t ttrans_hidden = 257;
  std::size_t ttrans_fc = 257;
  std::size_t ftrans_kernel = 9;
  bool enable_f_trans = true;
  bool enable_t_trans = true;
  bool input_norm = true;           // causal running-mean normalization of the input

  std::size_t freq_bins() const { return static_cast<std::size_t>(n_fft / 2 + 1); }
  std::size_t subband_width() const { return 2 * context + 2; }
  std::size_t latency_samples() const { return look_ahead * static_cast<std::size_t>(hop); }
  double latency_ms() const { return 1000.0 * static_cast<double>(latency_samples()) / sample_rate; }

  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidConfig("model config: " + m); };
    if (n_fft <= 0 || n_fft % 2 != 0) fail("n_fft must be a positive even integer");
    if (hop <= 0 || n_fft % hop != 0) fail("hop must divide n_fft");
    if (sample_rate <= 0) fail("sample_rate must be positive");
    if (context >= freq_bins()) fail("context N=" + std::to_string(context) + " must be smaller than F=" + std::to_string(freq_bins()));
    if (full_hidden == 0 || sub_hidden == 0 || ttrans_hidden == 0 || ttrans_fc == 0) fail("hidden sizes must be >= 1");
    if (full_layers == 0 || sub_layers == 0) fail("layer counts must be >= 1");
    if (ftrans_kernel % 2 == 0) fail("ftrans_kernel must be odd");
  }

  // 9-bin configuration used for gradient checks.
  static ModelConfig toy() {
    ModelConfig c;
    c.n_fft = 16;
    c.hop = 8;
    c.look_ahead = 1;
    c.context = 1;
    c.full_hidden = 8;
    c.sub_hidden = 6;
    c.ttrans_hidden = 9;
    c.ttrans_fc = 9;
    return c;
  }

  // Full STFT geometry and look-ahead with narrow layers; trains on one CPU
  // core in minutes.
  static ModelConfig desk() {
    ModelConfig c;
    c.context = 7;
    c.full_hidden = 32;
    c.sub_hidden = 16;
    c.ttrans_hidden = 32;
    c.ttrans_fc = 32;
    return c;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Variant { baseline, f_trans, t_trans, full };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::f_trans: return "+f_trans";
    case Variant::t_trans: return "+t_trans";
    case Variant::full: return "full";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "+f_trans" || s == "f_trans") return Variant::f_trans;
  if (s == "+t_trans" || s == "t_trans") return Variant::t_trans;
  if (s == "full") return Variant::full;
  return std::nullopt;
}

inline ModelConfig with_variant(ModelConfig c, Variant v) {
  c.enable_f_trans = v == Variant::f_trans || v == Variant::full;
  c.enable_t_trans = v == Variant::t_trans || v == Variant::full;
  return c;
}

inline Variant variant_of(const ModelConfig& c) {
  if (c.enable_f_trans && c.enable_t_trans) return Variant::full;
  if (c.enable_f_trans) return Variant::f_trans;
  if (c.enable_t_trans) return Variant::t_trans;
  return Variant::baseline;
}

struct ParamCount {
  std::map<std::string, std::size_t> per_module;
  std::size_t total = 0;
};

inline std::size_t lstm_param_count(std::size_t input, std::size_t hidden) {
  return 4 * hidden * (input + hidden) + 8 * hidden;
}

inline std::size_t linear_param_count(std::size_t input, std::size_t output) { return output * input + output; }

// Closed-form count of trainable scalars for a configuration and variant.
inline ParamCount param_count(const ModelConfig& base, Variant which) {
  const ModelConfig c = with_variant(base, which);
  const std::size_t F = c.freq_bins();
  ParamCount out;
  if (c.enable_f_trans)
    out.per_module["ftrans"] = (c.ftrans_kernel + 1) + 2 + linear_param_count(F, F) + 3;
  if (c.enable_t_trans)
    out.per_module["ttrans"] = lstm_param_count(F, c.ttrans_hidden) + linear_param_count(c.ttrans_hidden, c.ttrans_fc) +
                               linear_param_count(F, c.ttrans_fc) + linear_param_count(c.ttrans_fc, F);
  std::size_t gfull = lstm_param_count(F, c.full_hidden) + linear_param_count(c.full_hidden, F);
  for (std::size_t l = 1; l < c.full_layers; ++l) gfull += lstm_param_count(c.full_hidden, c.full_hidden);
  out.per_module["gfull"] = gfull;
  std::size_t gsub = lstm_param_count(c.subband_width(), c.sub_hidden) + linear_param_count(c.sub_hidden, 2);
  for (std::size_t l = 1; l < c.sub_layers; ++l) gsub += lstm_param_count(c.sub_hidden, c.sub_hidden);
  out.per_module["gsub"] = gsub;
  for (const auto& [_, n] : out.per_module) out.total += n;
  return out;
}

}  // namespace ptfse::model
