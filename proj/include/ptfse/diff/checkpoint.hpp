#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ptfse/diff/params.hpp"

namespace ptfse::diff {

// Binary parameter checkpoint:
//   "PTFSE\x01" | u32 count | per entry: u32 name_len, name bytes, u32 rank,
//   u32 dims[rank], f32 values[prod(dims)]   (all little-endian)
inline constexpr std::array<char, 6> kCheckpointMagic{'P', 'T', 'F', 'S', 'E', '\x01'};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  float f32() {
    const std::uint32_t bits = u32("value");
    return std::bit_cast<float>(bits);
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size())
      throw InvalidInput(std::string("checkpoint truncated while reading ") + what + " at byte " + std::to_string(pos_));
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename T>
std::vector<unsigned char> encode_checkpoint(const ParamStore<T>& params) {
  std::vector<unsigned char> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(params.count()));
  for (const auto& [name, t] : params.entries()) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (T v : t.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

inline std::vector<CheckpointEntry> decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kCheckpointMagic.size() ||
      !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; }))
    throw InvalidInput("not a checkpoint: bad magic bytes");
  detail::ByteReader in(bytes);
  in.str(kCheckpointMagic.size(), "magic");
  const std::uint32_t count = in.u32("entry count");
  std::vector<CheckpointEntry> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    CheckpointEntry e;
    e.name = in.str(in.u32("name length"), "name");
    const std::uint32_t rank = in.u32("rank");
    if (rank == 0 || rank > 8) throw InvalidInput("checkpoint entry " + e.name + " has rank " + std::to_string(rank));
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(in.u32("dims"));
    const std::size_t n = numel(e.shape);
    e.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) e.values.push_back(in.f32());
    out.push_back(std::move(e));
  }
  if (!in.at_end()) throw InvalidInput("checkpoint has trailing bytes");
  return out;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

// Copies checkpoint values into an existing store. Every name and shape must
// match; all mismatches are listed in the error.
template <typename T>
void apply_checkpoint(ParamStore<T>& params, const std::vector<CheckpointEntry>& entries) {
  std::string problems;
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  for (const auto& [name, t] : params.entries()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      problems += "\n  missing " + name + " " + to_string(t.shape());
    } else if (it->second->shape != t.shape()) {
      problems += "\n  " + name + ": model " + to_string(t.shape()) + " vs checkpoint " + to_string(it->second->shape);
    }
  }
  for (const auto& e : entries)
    if (!params.contains(e.name)) problems += "\n  unexpected " + e.name + " " + to_string(e.shape);
  if (!problems.empty()) throw ContractError("checkpoint does not match the model configuration:" + problems);
  for (const auto& [name, t] : params.entries()) {
    Tensor<T> dst = t;
    const auto& src = by_name.at(name)->values;
    for (std::size_t i = 0; i < src.size(); ++i) dst.values()[i] = static_cast<T>(src[i]);
  }
}

}  // namespace ptfse::diff
