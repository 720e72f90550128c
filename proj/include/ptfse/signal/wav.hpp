#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ptfse/errors.hpp"
#include "ptfse/signal/types.hpp"

namespace ptfse::signal {

namespace detail {

inline std::uint32_t read_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_le32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_le16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace detail

// Parses a RIFF/WAVE PCM16 mono 16 kHz image.
inline Waveform decode_wav(const std::vector<unsigned char>& bytes, const std::string& name = "<memory>") {
  using detail::read_le16;
  using detail::read_le32;
  auto bad = [&](const std::string& what) { return UnsupportedFormat(name + ": " + what); };
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE")
    throw bad("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.begin() + pos, bytes.begin() + pos + 4);
    const std::size_t len = read_le32(&bytes[pos + 4]);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size() && id != "data") throw bad("truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (len < 16) throw bad("fmt chunk too short");
      const auto format = read_le16(&bytes[body]);
      const auto channels = read_le16(&bytes[body + 2]);
      const auto rate = read_le32(&bytes[body + 4]);
      const auto bits = read_le16(&bytes[body + 14]);
      if (format != 1) throw bad("audio_format=" + std::to_string(format) + " (only PCM=1 is supported)");
      if (channels != 1) throw bad("channels=" + std::to_string(channels) + " (only mono is supported)");
      if (rate != static_cast<std::uint32_t>(kSampleRate))
        throw bad("sample_rate=" + std::to_string(rate) + " (only 16000 Hz is supported)");
      if (bits != 16) throw bad("bits_per_sample=" + std::to_string(bits) + " (only 16 is supported)");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw bad("data chunk precedes fmt chunk");
      const std::size_t avail = std::min(len, bytes.size() - body);
      Waveform w;
      w.samples.resize(avail / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_le16(&bytes[body + 2 * i]));
        w.samples[i] = raw / 32768.0;
      }
      return w;
    }
    pos = body + len + (len & 1);
  }
  throw bad("missing data chunk");
}

inline Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

inline std::vector<unsigned char> encode_wav(const Waveform& w) {
  if (w.sample_rate != kSampleRate)
    throw UnsupportedFormat("sample_rate=" + std::to_string(w.sample_rate) + " (only 16000 Hz is supported)");
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_le32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_le32(out, 16);
  detail::put_le16(out, 1);
  detail::put_le16(out, 1);
  detail::put_le32(out, kSampleRate);
  detail::put_le32(out, kSampleRate * 2);
  detail::put_le16(out, 2);
  detail::put_le16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_le32(out, data_bytes);
  for (double x : w.samples) {
    const double clamped = std::clamp(x, -1.0, 1.0);
    const long q = std::clamp(std::lround(clamped * 32768.0), -32768L, 32767L);
    detail::put_le16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w) {
  const auto bytes = encode_wav(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ptfse::signal
