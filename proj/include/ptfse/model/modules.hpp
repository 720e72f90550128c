#pragma once

#include <string>
#include <vector>

#include "ptfse/diff/conv.hpp"
#include "ptfse/diff/lstm.hpp"
#include "ptfse/diff/ops.hpp"
#include "ptfse/diff/params.hpp"
#include "ptfse/rng.hpp"

// Building blocks of the network. Spectrogram-shaped tensors are frame-major,
// [T, F]: row t is the spectrum of frame t.
namespace ptfse::model {

using diff::LstmWeights;
using diff::ParamStore;
using diff::Shape;
using diff::Tensor;

template <typename T>
struct LinearWeights {
  Tensor<T> weight;  // [out, in]
  Tensor<T> bias;    // [out]

  static LinearWeights create(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    return {store.add_uniform(name + ".weight", {out, in}, in, rng), store.add_constant(name + ".bias", {out}, T{0})};
  }
  Tensor<T> operator()(const Tensor<T>& x) const { return diff::linear(x, weight, bias); }
};

// Zero biases except +1 on the forget-gate slice of b_ih.
template <typename T>
LstmWeights<T> create_lstm(ParamStore<T>& store, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng) {
  LstmWeights<T> w;
  w.w_ih = store.add_uniform(name + ".w_ih", {4 * hidden, input}, input, rng);
  w.w_hh = store.add_uniform(name + ".w_hh", {4 * hidden, hidden}, hidden, rng);
  w.b_ih = store.add_constant(name + ".b_ih", {4 * hidden}, T{0});
  w.b_hh = store.add_constant(name + ".b_hh", {4 * hidden}, T{0});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) w.b_ih.values()[j] = T{1};
  return w;
}

template <typename T>
std::vector<LstmWeights<T>> create_lstm_stack(ParamStore<T>& store, const std::string& name, std::size_t input,
                                              std::size_t hidden, std::size_t layers, Rng& rng) {
  std::vector<LstmWeights<T>> out;
  for (std::size_t l = 0; l < layers; ++l)
    out.push_back(create_lstm(store, name + ".lstm" + std::to_string(l + 1), l == 0 ? input : hidden, hidden, rng));
  return out;
}

namespace detail {

template <typename T>
void require_frames(const Tensor<T>& x, std::size_t freq_bins, const char* who) {
  if (x.rank() != 2 || x.dim(1) != freq_bins)
    throw ShapeError(std::string(who) + ": expected [T, " + std::to_string(freq_bins) + "], got " + diff::to_string(x.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Frequency transformation. Per frame x_t (weights shared across frames):
//   a_t  = sigmoid(conv2d_1x1(conv1d_k(x_t)))        attention over bins
//   u_t  = FC(a_t * x_t)
//   out  = conv2d_1x1 over the two channels [u_t; x_t]
template <typename T>
struct FTransParams {
  Tensor<T> conv1d_weight, conv1d_bias;  // [1,1,k], [1]
  Tensor<T> att_weight, att_bias;        // [1,1,1,1], [1]
  LinearWeights<T> fc;                   // F -> F
  Tensor<T> mix_weight, mix_bias;        // [1,2,1,1], [1]

  std::size_t bins() const { return fc.weight.dim(0); }

  static FTransParams create(ParamStore<T>& store, std::size_t freq_bins, std::size_t kernel, Rng& rng) {
    FTransParams p;
    p.conv1d_weight = store.add_uniform("ftrans.conv1d.weight", {1, 1, kernel}, kernel, rng);
    p.conv1d_bias = store.add_constant("ftrans.conv1d.bias", {1}, T{0});
    p.att_weight = store.add_uniform("ftrans.att_conv2d.weight", {1, 1, 1, 1}, 1, rng);
    p.att_bias = store.add_constant("ftrans.att_conv2d.bias", {1}, T{0});
    p.fc = LinearWeights<T>::create(store, "ftrans.fc", freq_bins, freq_bins, rng);
    p.mix_weight = store.add_uniform("ftrans.mix_conv2d.weight", {1, 2, 1, 1}, 2, rng);
    p.mix_bias = store.add_constant("ftrans.mix_conv2d.bias", {1}, T{0});
    return p;
  }
};

template <typename T>
Tensor<T> f_trans_forward(const Tensor<T>& x, const FTransParams<T>& p) {
  detail::require_frames(x, p.bins(), "f_trans");
  const std::size_t frames = x.dim(0), bins = x.dim(1);
  const Tensor<T> planes = diff::reshape(x, {frames, 1, bins});               // [T, 1, F]
  const Tensor<T> conv = diff::conv1d_freq(planes, p.conv1d_weight, p.conv1d_bias);
  const Tensor<T> att = diff::sigmoid(diff::conv2d(diff::reshape(conv, {1, frames, bins}), p.att_weight, p.att_bias));
  const Tensor<T> x1 = diff::reshape(x, {1, frames, bins});
  const Tensor<T> projected = p.fc(diff::mul(att, x1));                       // [1, T, F]
  const Tensor<T> mixed = diff::conv2d(diff::concat_first<T>({projected, x1}), p.mix_weight, p.mix_bias);
  return diff::reshape(mixed, {frames, bins});
}

// ---------------------------------------------------------------------------
// Temporal transformation. h_{t-1} is the LSTM state after consuming frames
// before t (the sequence fed to the LSTM is e delayed by one, zero first):
//   w_t = sigmoid(FC3(FC1(h_{t-1}) + FC2(e_t))),   out_t = w_t * e_t
template <typename T>
struct TTransParams {
  LstmWeights<T> lstm;
  LinearWeights<T> fc1, fc2, fc3;

  std::size_t bins() const { return fc3.weight.dim(0); }

  static TTransParams create(ParamStore<T>& store, std::size_t freq_bins, std::size_t hidden, std::size_t fc_width, Rng& rng) {
    TTransParams p;
    p.lstm = create_lstm(store, "ttrans.lstm", freq_bins, hidden, rng);
    p.fc1 = LinearWeights<T>::create(store, "ttrans.fc1", hidden, fc_width, rng);
    p.fc2 = LinearWeights<T>::create(store, "ttrans.fc2", freq_bins, fc_width, rng);
    p.fc3 = LinearWeights<T>::create(store, "ttrans.fc3", fc_width, freq_bins, rng);
    return p;
  }
};

template <typename T>
Tensor<T> t_trans_forward(const Tensor<T>& e, const TTransParams<T>& p) {
  detail::require_frames(e, p.bins(), "t_trans");
  const Tensor<T> history = diff::lstm_layer(diff::delay_first(e), p.lstm);  // row t = h_{t-1}
  const Tensor<T> weights = diff::sigmoid(p.fc3(diff::add(p.fc1(history), p.fc2(e))));
  return diff::mul(weights, e);
}

// ---------------------------------------------------------------------------
// Full-band model: stacked LSTM over frames, then FC back to F with relu.
template <typename T>
struct GFullParams {
  std::vector<LstmWeights<T>> lstm;
  LinearWeights<T> fc;

  std::size_t bins() const { return fc.weight.dim(0); }

  static GFullParams create(ParamStore<T>& store, std::size_t freq_bins, std::size_t hidden, std::size_t layers, Rng& rng) {
    GFullParams p;
    p.lstm = create_lstm_stack(store, "gfull", freq_bins, hidden, layers, rng);
    p.fc = LinearWeights<T>::create(store, "gfull.fc", hidden, freq_bins, rng);
    return p;
  }
};

template <typename T>
Tensor<T> g_full_forward(const Tensor<T>& x, const GFullParams<T>& p) {
  detail::require_frames(x, p.bins(), "g_full");
  return diff::relu(p.fc(diff::lstm_forward(x, p.lstm)));
}

// ---------------------------------------------------------------------------
// Sub-band input: for every selected bin f and frame t the 2N+1 magnitudes
// centred on f (circular wrap at the spectrum edges) followed by the
// embedding element at (t, f). x and emb are [T, F]; the result is
// [T, |bins|, 2N+2].
template <typename T>
Tensor<T> subband_unfold(const Tensor<T>& x, const Tensor<T>& emb, std::size_t context, const std::vector<std::size_t>& bins) {
  if (x.rank() != 2 || x.shape() != emb.shape())
    throw ShapeError("subband_unfold: x " + diff::to_string(x.shape()) + " vs embedding " + diff::to_string(emb.shape()));
  const std::size_t frames = x.dim(0), F = x.dim(1);
  if (context >= F) throw InvalidConfig("subband_unfold: N=" + std::to_string(context) + " must be smaller than F=" + std::to_string(F));
  for (auto b : bins)
    if (b >= F) throw ShapeError("subband_unfold: bin " + std::to_string(b) + " out of range for F=" + std::to_string(F));
  const std::size_t width = 2 * context + 2, S = bins.size();

  // source[j] for j < 2N+1 indexes x, j = 2N+1 indexes emb.
  std::vector<std::size_t> neighbour(S * (width - 1));
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j + 1 < width; ++j)
      neighbour[s * (width - 1) + j] = (bins[s] + F + j - context) % F;

  std::vector<T> out(frames * S * width);
  auto xv = x.values();
  auto ev = emb.values();
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      T* dst = out.data() + (t * S + s) * width;
      for (std::size_t j = 0; j + 1 < width; ++j) dst[j] = xv[t * F + neighbour[s * (width - 1) + j]];
      dst[width - 1] = ev[t * F + bins[s]];
    }
  return diff::make_result<T>({frames, S, width}, std::move(out), {x.node_ptr(), emb.node_ptr()}, "subband_unfold",
                              [neighbour, bins, frames, F, S, width](diff::Node<T>& self) {
                                auto& px = *self.parents[0];
                                auto& pe = *self.parents[1];
                                T* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
                                T* ge = pe.requires_grad ? pe.ensure_grad().data() : nullptr;
                                for (std::size_t t = 0; t < frames; ++t)
                                  for (std::size_t s = 0; s < S; ++s) {
                                    const T* g = self.grad.data() + (t * S + s) * width;
                                    if (gx)
                                      for (std::size_t j = 0; j + 1 < width; ++j) gx[t * F + neighbour[s * (width - 1) + j]] += g[j];
                                    if (ge) ge[t * F + bins[s]] += g[width - 1];
                                  }
                              });
}

// ---------------------------------------------------------------------------
// Sub-band model shared across frequencies: stacked LSTM (frequencies are the
// batch) then FC -> 2. Output step t is the mask of frame t - look_ahead, so
// the first look_ahead steps are dropped. Returns [2, T - look_ahead, S].
template <typename T>
struct GSubParams {
  std::vector<LstmWeights<T>> lstm;
  LinearWeights<T> fc;

  static GSubParams create(ParamStore<T>& store, std::size_t input, std::size_t hidden, std::size_t layers, Rng& rng) {
    GSubParams p;
    p.lstm = create_lstm_stack(store, "gsub", input, hidden, layers, rng);
    p.fc = LinearWeights<T>::create(store, "gsub.fc", hidden, 2, rng);
    return p;
  }
};

template <typename T>
Tensor<T> g_sub_forward(const Tensor<T>& z, const GSubParams<T>& p, std::size_t look_ahead) {
  if (z.rank() != 3) throw ShapeError("g_sub: expected [T, S, 2N+2], got " + diff::to_string(z.shape()));
  if (z.dim(0) <= look_ahead)
    throw InvalidInput("g_sub: " + std::to_string(z.dim(0)) + " frames do not exceed the look-ahead of " + std::to_string(look_ahead));
  const Tensor<T> steps = p.fc(diff::lstm_forward(z, p.lstm));  // [T, S, 2]
  return diff::last_to_front(diff::slice_first(steps, look_ahead, z.dim(0)));
}

}  // namespace ptfse::model
