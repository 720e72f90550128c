#pragma once

#include <array>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ptfse/diff/ops.hpp"
#include "ptfse/masking/bands.hpp"
#include "ptfse/masking/mask.hpp"

namespace ptfse::masking {

using diff::Tensor;

// Mask in tensor form, [2, T, W]: plane 0 real, plane 1 imaginary; column c
// holds frequency bin bins[c]. Under drop-band training W < F.
template <typename T>
struct MaskTensor {
  Tensor<T> values;
  std::vector<std::size_t> bins;
  bool compressed = true;

  std::size_t frames() const { return values.dim(1); }
  std::size_t width() const { return values.dim(2); }
};

inline std::vector<std::size_t> all_bins(std::size_t freq_bins) {
  std::vector<std::size_t> b(freq_bins);
  std::iota(b.begin(), b.end(), std::size_t{0});
  return b;
}

// Packs a ComplexMask into [2, T, W] restricted to `bins` (all bins if empty).
template <typename T>
MaskTensor<T> to_tensor(const ComplexMask& m, std::vector<std::size_t> bins = {}) {
  if (bins.empty()) bins = all_bins(m.bins());
  const std::size_t frames = m.frames(), width = bins.size();
  std::vector<T> v(2 * frames * width);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t c = 0; c < width; ++c) {
      if (bins[c] >= m.bins()) throw ShapeError("to_tensor: bin " + std::to_string(bins[c]) + " out of range");
      v[t * width + c] = static_cast<T>(m.real(bins[c], t));
      v[(frames + t) * width + c] = static_cast<T>(m.imag(bins[c], t));
    }
  return {Tensor<T>({2, frames, width}, std::move(v)), std::move(bins), m.compressed};
}

// Inverse of to_tensor for a full-width mask.
template <typename T>
ComplexMask to_mask(const MaskTensor<T>& mt) {
  const std::size_t frames = mt.frames(), width = mt.width();
  const std::size_t freq = mt.bins.empty() ? width : mt.bins.back() + 1;
  ComplexMask m{signal::Grid<double>(freq, frames), signal::Grid<double>(freq, frames), mt.compressed};
  auto v = mt.values.values();
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t c = 0; c < width; ++c) {
      m.real(mt.bins[c], t) = static_cast<double>(v[t * width + c]);
      m.imag(mt.bins[c], t) = static_cast<double>(v[(frames + t) * width + c]);
    }
  return m;
}

namespace detail {

template <typename T>
void check_pair(const MaskTensor<T>& pred, const MaskTensor<T>& target, const char* op, bool require_compressed) {
  if (pred.compressed != target.compressed)
    throw ContractError(std::string(op) + ": compression flags differ (pred " + (pred.compressed ? "compressed" : "raw") +
                        ", target " + (target.compressed ? "compressed" : "raw") + ")");
  if (require_compressed && !pred.compressed) throw ContractError(std::string(op) + ": masks must be in the compressed domain");
  if (pred.values.shape() != target.values.shape() || pred.bins != target.bins)
    throw ContractError(std::string(op) + ": shape mismatch " + diff::to_string(pred.values.shape()) + " vs " +
                        diff::to_string(target.values.shape()));
  if (pred.values.rank() != 3 || pred.values.dim(0) != 2 || pred.bins.size() != pred.values.dim(2))
    throw ShapeError(std::string(op) + ": expected [2, T, W] with W bin labels, got " + diff::to_string(pred.values.shape()));
}

}  // namespace detail

// Pooling groups of one band over the columns present: consecutive runs of
// `step` bins inside the band; groups with no present column are dropped.
inline std::vector<std::vector<std::size_t>> band_groups(const BinRange& range, std::size_t step,
                                                         const std::vector<std::size_t>& bins) {
  std::vector<std::vector<std::size_t>> groups((range.width() + step - 1) / step);
  for (std::size_t c = 0; c < bins.size(); ++c)
    if (range.contains(bins[c])) groups[(bins[c] - range.begin) / step].push_back(c);
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  return groups;
}

// Unweighted per-band terms: MSE between pooled prediction and pooled target,
// averaged over pooled bins, frames and both planes. Absent when a band has
// no column present.
template <typename T>
std::array<std::optional<Tensor<T>>, 3> pp_cirm_band_terms(const MaskTensor<T>& pred, const MaskTensor<T>& target,
                                                           const BandPartition& bands) {
  detail::check_pair(pred, target, "pp_cirm_loss", true);
  bands.validate();
  for (auto b : pred.bins)
    if (b >= bands.bins()) throw ShapeError("pp_cirm_loss: bin " + std::to_string(b) + " outside the band partition");
  const Tensor<T> tgt = target.values.detach();
  std::array<std::optional<Tensor<T>>, 3> terms;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto groups = band_groups(bands.ranges[b], bands.pool_steps[b], pred.bins);
    if (groups.empty()) continue;
    terms[b] = diff::mse(diff::group_mean_last(pred.values, groups), diff::group_mean_last(tgt, groups));
  }
  return terms;
}

// w1 MSE(LF) + w2 MSE(pool2 MF) + w3 MSE(pool4 HF).
template <typename T>
Tensor<T> pp_cirm_loss(const MaskTensor<T>& pred, const MaskTensor<T>& target, const BandPartition& bands) {
  const auto terms = pp_cirm_band_terms(pred, target, bands);
  std::optional<Tensor<T>> total;
  for (std::size_t b = 0; b < 3; ++b) {
    if (!terms[b]) continue;
    const Tensor<T> weighted = diff::scale(*terms[b], static_cast<T>(bands.weights[b]));
    total = total ? diff::add(*total, weighted) : weighted;
  }
  if (!total) throw InvalidInput("pp_cirm_loss: no bins selected");
  return *total;
}

// Plain MSE over all 2 x T x W entries.
template <typename T>
Tensor<T> cirm_mse_loss(const MaskTensor<T>& pred, const MaskTensor<T>& target) {
  if (pred.values.shape() != target.values.shape())
    throw ShapeError("cirm_mse_loss: shape mismatch " + diff::to_string(pred.values.shape()) + " vs " +
                     diff::to_string(target.values.shape()));
  detail::check_pair(pred, target, "cirm_mse_loss", false);
  return diff::mse(pred.values, target.values.detach());
}

}  // namespace ptfse::masking
