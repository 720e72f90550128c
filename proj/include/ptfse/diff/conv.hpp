#pragma once

#include <string>
#include <vector>

#include "ptfse/diff/tensor.hpp"

namespace ptfse::diff {

// Cross-correlation along the last (frequency) axis with zero "same" padding.
// x is [C_in, F] or [B, C_in, F]; kernels [C_out, C_in, k] with k odd.
template <typename T>
Tensor<T> conv1d_freq(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias) {
  if (kernels.rank() != 3) throw ShapeError("conv1d_freq: kernels must be [C_out, C_in, k], got " + to_string(kernels.shape()));
  const std::size_t c_out = kernels.dim(0), c_in = kernels.dim(1), k = kernels.dim(2);
  if (k % 2 == 0) throw InvalidConfig("conv1d_freq: kernel size must be odd, got " + std::to_string(k));
  if (x.rank() != 2 && x.rank() != 3) throw ShapeError("conv1d_freq: x must be [C_in, F] or [B, C_in, F], got " + to_string(x.shape()));
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t xc = x.dim(x.rank() - 2), width = x.dim(x.rank() - 1);
  if (xc != c_in) throw ShapeError("conv1d_freq: x " + to_string(x.shape()) + " vs kernels " + to_string(kernels.shape()));
  if (bias.rank() != 1 || bias.dim(0) != c_out) throw ShapeError("conv1d_freq: bias " + to_string(bias.shape()) + " for " + std::to_string(c_out) + " output channels");

  const auto half = static_cast<long>(k / 2);
  const auto W = static_cast<long>(width);
  auto xv = x.values();
  auto kv = kernels.values();
  std::vector<T> out(batch * c_out * width);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < c_out; ++o)
      for (long f = 0; f < W; ++f) {
        T acc = bias.values()[o];
        for (std::size_t c = 0; c < c_in; ++c)
          for (std::size_t j = 0; j < k; ++j) {
            const long src = f + static_cast<long>(j) - half;
            if (src < 0 || src >= W) continue;
            acc += kv[(o * c_in + c) * k + j] * xv[(b * c_in + c) * width + src];
          }
        out[(b * c_out + o) * width + f] = acc;
      }

  Shape shape = batched ? Shape{batch, c_out, width} : Shape{c_out, width};
  return make_result<T>(std::move(shape), std::move(out), {x.node_ptr(), kernels.node_ptr(), bias.node_ptr()},
                        "conv1d_freq", [=](Node<T>& self) {
                          auto& px = *self.parents[0];
                          auto& pk = *self.parents[1];
                          auto& pb = *self.parents[2];
                          T* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
                          T* gk = pk.requires_grad ? pk.ensure_grad().data() : nullptr;
                          T* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
                          for (std::size_t b = 0; b < batch; ++b)
                            for (std::size_t o = 0; o < c_out; ++o)
                              for (long f = 0; f < W; ++f) {
                                const T g = self.grad[(b * c_out + o) * width + f];
                                if (gb) gb[o] += g;
                                for (std::size_t c = 0; c < c_in; ++c)
                                  for (std::size_t j = 0; j < k; ++j) {
                                    const long src = f + static_cast<long>(j) - half;
                                    if (src < 0 || src >= W) continue;
                                    const std::size_t xi = (b * c_in + c) * width + src;
                                    const std::size_t ki = (o * c_in + c) * k + j;
                                    if (gx) gx[xi] += g * pk.value[ki];
                                    if (gk) gk[ki] += g * px.value[xi];
                                  }
                              }
                        });
}

// 2-D cross-correlation with zero "same" padding. x [C_in, H, W], kernels
// [C_out, C_in, kh, kw] with odd kh, kw. A 1x1 kernel is a per-position
// channel mix.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias) {
  if (x.rank() != 3) throw ShapeError("conv2d: x must be [C_in, H, W], got " + to_string(x.shape()));
  if (kernels.rank() != 4) throw ShapeError("conv2d: kernels must be [C_out, C_in, kh, kw], got " + to_string(kernels.shape()));
  const std::size_t c_out = kernels.dim(0), c_in = kernels.dim(1), kh = kernels.dim(2), kw = kernels.dim(3);
  if (x.dim(0) != c_in) throw ShapeError("conv2d: x " + to_string(x.shape()) + " vs kernels " + to_string(kernels.shape()));
  if (kh % 2 == 0 || kw % 2 == 0) throw InvalidConfig("conv2d: kernel sizes must be odd");
  if (bias.rank() != 1 || bias.dim(0) != c_out) throw ShapeError("conv2d: bias " + to_string(bias.shape()) + " for " + std::to_string(c_out) + " output channels");
  const long H = static_cast<long>(x.dim(1)), W = static_cast<long>(x.dim(2));
  const long hh = static_cast<long>(kh / 2), hw = static_cast<long>(kw / 2);
  const std::size_t plane = static_cast<std::size_t>(H * W);

  auto xv = x.values();
  auto kv = kernels.values();
  std::vector<T> out(c_out * plane);
  for (std::size_t o = 0; o < c_out; ++o) {
    T* dst = out.data() + o * plane;
    std::fill(dst, dst + plane, bias.values()[o]);
    for (std::size_t c = 0; c < c_in; ++c)
      for (long i = 0; i < static_cast<long>(kh); ++i)
        for (long j = 0; j < static_cast<long>(kw); ++j) {
          const T wgt = kv[((o * c_in + c) * kh + i) * kw + j];
          for (long r = 0; r < H; ++r) {
            const long sr = r + i - hh;
            if (sr < 0 || sr >= H) continue;
            for (long s = 0; s < W; ++s) {
              const long sc = s + j - hw;
              if (sc < 0 || sc >= W) continue;
              dst[r * W + s] += wgt * xv[c * plane + sr * W + sc];
            }
          }
        }
  }
  return make_result<T>({c_out, x.dim(1), x.dim(2)}, std::move(out),
                        {x.node_ptr(), kernels.node_ptr(), bias.node_ptr()}, "conv2d", [=](Node<T>& self) {
                          auto& px = *self.parents[0];
                          auto& pk = *self.parents[1];
                          auto& pb = *self.parents[2];
                          T* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
                          T* gk = pk.requires_grad ? pk.ensure_grad().data() : nullptr;
                          T* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
                          for (std::size_t o = 0; o < c_out; ++o) {
                            const T* g = self.grad.data() + o * plane;
                            if (gb)
                              for (std::size_t p = 0; p < plane; ++p) gb[o] += g[p];
                            for (std::size_t c = 0; c < c_in; ++c)
                              for (long i = 0; i < static_cast<long>(kh); ++i)
                                for (long j = 0; j < static_cast<long>(kw); ++j) {
                                  const std::size_t ki = ((o * c_in + c) * kh + i) * kw + j;
                                  T acc{0};
                                  for (long r = 0; r < H; ++r) {
                                    const long sr = r + i - hh;
                                    if (sr < 0 || sr >= H) continue;
                                    for (long s = 0; s < W; ++s) {
                                      const long sc = s + j - hw;
                                      if (sc < 0 || sc >= W) continue;
                                      const std::size_t xi = c * plane + sr * W + sc;
                                      acc += g[r * W + s] * px.value[xi];
                                      if (gx) gx[xi] += g[r * W + s] * pk.value[ki];
                                    }
                                  }
                                  if (gk) gk[ki] += acc;
                                }
                          }
                        });
}

}  // namespace ptfse::diff
