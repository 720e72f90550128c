#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ptfse/errors.hpp"
#include "ptfse/model/config.hpp"
#include "ptfse/pipeline/train.hpp"

// Line-oriented `key = value` configuration covering the model and training
// settings. '#' starts a comment. Keys not present keep their defaults.
namespace ptfse::cli {

struct RunConfig {
  model::ModelConfig model;
  pipeline::TrainConfig train;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
bool parse_number(std::string_view s, N& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

inline bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1") return out = true, true;
  if (s == "false" || s == "0") return out = false, true;
  return false;
}

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

struct Field {
  std::string key;
  std::string help;
  std::function<bool(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Owner, typename N>
Field numeric(std::string key, std::string help, Owner RunConfig::*owner, N Owner::*member) {
  return {std::move(key), std::move(help),
          [owner, member](RunConfig& c, std::string_view v) { return parse_number(v, (c.*owner).*member); },
          [owner, member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<N>)
              return format_double((c.*owner).*member);
            else
              return std::to_string((c.*owner).*member);
          }};
}

template <typename Owner>
Field boolean(std::string key, std::string help, Owner RunConfig::*owner, bool Owner::*member) {
  return {std::move(key), std::move(help),
          [owner, member](RunConfig& c, std::string_view v) { return parse_bool(v, (c.*owner).*member); },
          [owner, member](const RunConfig& c) { return std::string((c.*owner).*member ? "true" : "false"); }};
}

inline const std::vector<Field>& fields() {
  using M = model::ModelConfig;
  using P = pipeline::TrainConfig;
  static const std::vector<Field> all = {
      numeric("n_fft", "STFT size", &RunConfig::model, &M::n_fft),
      numeric("hop", "STFT hop", &RunConfig::model, &M::hop),
      numeric("sample_rate", "Hz", &RunConfig::model, &M::sample_rate),
      numeric("look_ahead", "future frames per mask frame", &RunConfig::model, &M::look_ahead),
      numeric("context", "sub-band neighbours per side", &RunConfig::model, &M::context),
      numeric("full_hidden", "full-band LSTM width", &RunConfig::model, &M::full_hidden),
      numeric("full_layers", "full-band LSTM layers", &RunConfig::model, &M::full_layers),
      numeric("sub_hidden", "sub-band LSTM width", &RunConfig::model, &M::sub_hidden),
      numeric("sub_layers", "sub-band LSTM layers", &RunConfig::model, &M::sub_layers),
      numeric("ttrans_hidden", "temporal gate LSTM width", &RunConfig::model, &M::ttrans_hidden),
      numeric("ttrans_fc", "temporal gate FC width", &RunConfig::model, &M::ttrans_fc),
      numeric("ftrans_kernel", "frequency attention kernel", &RunConfig::model, &M::ftrans_kernel),
      boolean("enable_f_trans", "frequency transformation block", &RunConfig::model, &M::enable_f_trans),
      boolean("enable_t_trans", "temporal transformation block", &RunConfig::model, &M::enable_t_trans),
      boolean("input_norm", "running-mean input normalization", &RunConfig::model, &M::input_norm),
      numeric("epochs", "", &RunConfig::train, &P::epochs),
      numeric("steps_per_epoch", "", &RunConfig::train, &P::steps_per_epoch),
      numeric("batch_size", "", &RunConfig::train, &P::batch_size),
      numeric("lr_initial", "", &RunConfig::train, &P::lr_initial),
      numeric("lr_after", "", &RunConfig::train, &P::lr_after),
      numeric("lr_switch_epoch", "", &RunConfig::train, &P::lr_switch_epoch),
      numeric("snr_min", "dB", &RunConfig::train, &P::snr_min),
      numeric("snr_max", "dB", &RunConfig::train, &P::snr_max),
      numeric("clip_seconds", "", &RunConfig::train, &P::clip_seconds),
      numeric("seed", "", &RunConfig::train, &P::seed),
      {"loss_kind", "pp_cirm or mse",
       [](RunConfig& c, std::string_view v) {
         auto k = pipeline::parse_loss_kind(v);
         if (k) c.train.loss_kind = *k;
         return k.has_value();
       },
       [](const RunConfig& c) { return std::string(pipeline::to_string(c.train.loss_kind)); }},
      numeric("drop_band_groups", "", &RunConfig::train, &P::drop_band_groups),
  };
  return all;
}

}  // namespace detail

// Parses config text on top of `base`. Errors name the key and line.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}, const std::string& source = "<config>") {
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw InvalidConfig(where + ": expected `key = value`, got '" + std::string(line) + "'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const auto& fs = detail::fields();
    auto it = std::find_if(fs.begin(), fs.end(), [&](const detail::Field& f) { return f.key == key; });
    if (it == fs.end()) throw InvalidConfig(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw InvalidConfig(where + ": duplicate key '" + key + "'");
    if (!it->set(base, value))
      throw InvalidConfig(where + ": invalid value '" + std::string(value) + "' for key '" + key + "'");
  }
  try {
    base.model.validate();
    base.train.validate();
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(source + ": " + e.what());
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base, path.string());
}

// Every key, one per line, in a form parse_config reads back unchanged.
inline std::string format_config(const RunConfig& c) {
  std::string out;
  for (const auto& f : detail::fields()) out += f.key + " = " + f.get(c) + "\n";
  return out;
}

inline void save_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot write config file");
  out << format_config(c);
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace ptfse::cli
