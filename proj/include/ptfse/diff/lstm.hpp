#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ptfse/diff/ops.hpp"
#include "ptfse/diff/tensor.hpp"

namespace ptfse::diff {

// Parameters of one LSTM layer, gate order (input, forget, cell, output):
// w_ih [4H, D], w_hh [4H, H], b_ih [4H], b_hh [4H].
template <typename T>
struct LstmWeights {
  Tensor<T> w_ih;
  Tensor<T> w_hh;
  Tensor<T> b_ih;
  Tensor<T> b_hh;

  std::size_t hidden() const { return w_hh.dim(1); }
  std::size_t input() const { return w_ih.dim(1); }
};

// One LSTM layer over time with zero initial state. x is [T, B, D] (B
// independent sequences sharing the weights) or [T, D]; the result is
// [T, B, H] or [T, H]. Fused op with hand-written backpropagation through time.
template <typename T>
Tensor<T> lstm_layer(const Tensor<T>& x, const LstmWeights<T>& p) {
  using Mat = RowMatrix<T>;
  if (p.w_ih.rank() != 2 || p.w_hh.rank() != 2 || p.w_hh.dim(0) != 4 * p.w_hh.dim(1) ||
      p.w_ih.dim(0) != p.w_hh.dim(0) || p.b_ih.size() != p.w_hh.dim(0) || p.b_hh.size() != p.w_hh.dim(0))
    throw ShapeError("lstm: inconsistent weights w_ih " + to_string(p.w_ih.shape()) + " w_hh " +
                     to_string(p.w_hh.shape()));
  if (x.rank() != 2 && x.rank() != 3) throw ShapeError("lstm: x must be [T, D] or [T, B, D], got " + to_string(x.shape()));
  if (x.shape().back() != p.input())
    throw ShapeError("lstm: x " + to_string(x.shape()) + " vs w_ih " + to_string(p.w_ih.shape()));

  const auto steps = static_cast<Eigen::Index>(x.dim(0));
  const auto batch = static_cast<Eigen::Index>(x.rank() == 3 ? x.dim(1) : 1);
  const auto D = static_cast<Eigen::Index>(p.input());
  const auto H = static_cast<Eigen::Index>(p.hidden());
  const Eigen::Index G = 4 * H;

  ConstMatMap<T> X(x.values().data(), steps * batch, D);
  ConstMatMap<T> Wih(p.w_ih.values().data(), G, D);
  ConstMatMap<T> Whh(p.w_hh.values().data(), G, H);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bih(p.b_ih.values().data(), G);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bhh(p.b_hh.values().data(), G);

  // gates: activated (i, f, g, o) per step; cells: c_t; out: h_t.
  auto gates = std::make_shared<Mat>(steps * batch, G);
  auto cells = std::make_shared<Mat>(steps * batch, H);
  std::vector<T> out(static_cast<std::size_t>(steps * batch * H));
  MatMap<T> Hs(out.data(), steps * batch, H);

  gates->noalias() = X * Wih.transpose();
  gates->rowwise() += bih + bhh;
  Mat h_prev = Mat::Zero(batch, H);
  Mat c_prev = Mat::Zero(batch, H);
  for (Eigen::Index t = 0; t < steps; ++t) {
    auto a = gates->middleRows(t * batch, batch);
    a.noalias() += h_prev * Whh.transpose();
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (Eigen::Index j = 0; j < H; ++j) {
        const T i = stable_sigmoid(a(b, j));
        const T f = stable_sigmoid(a(b, H + j));
        const T g = std::tanh(a(b, 2 * H + j));
        const T o = stable_sigmoid(a(b, 3 * H + j));
        a(b, j) = i;
        a(b, H + j) = f;
        a(b, 2 * H + j) = g;
        a(b, 3 * H + j) = o;
        const T c = f * c_prev(b, j) + i * g;
        (*cells)(t * batch + b, j) = c;
        Hs(t * batch + b, j) = o * std::tanh(c);
      }
    }
    c_prev = cells->middleRows(t * batch, batch);
    h_prev = Hs.middleRows(t * batch, batch);
  }

  Shape shape = x.rank() == 3 ? Shape{x.dim(0), x.dim(1), p.hidden()} : Shape{x.dim(0), p.hidden()};
  return make_result<T>(
      std::move(shape), std::move(out),
      {x.node_ptr(), p.w_ih.node_ptr(), p.w_hh.node_ptr(), p.b_ih.node_ptr(), p.b_hh.node_ptr()}, "lstm",
      [gates, cells, steps, batch, D, H, G](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pwih = *self.parents[1];
        auto& pwhh = *self.parents[2];
        auto& pbih = *self.parents[3];
        auto& pbhh = *self.parents[4];
        ConstMatMap<T> dY(self.grad.data(), steps * batch, H);
        ConstMatMap<T> Hs(self.value.data(), steps * batch, H);
        ConstMatMap<T> Whh(pwhh.value.data(), G, H);

        Mat dA(steps * batch, G);  // gradients w.r.t. gate pre-activations
        Mat dh_next = Mat::Zero(batch, H);
        Mat dc_next = Mat::Zero(batch, H);
        for (Eigen::Index t = steps - 1; t >= 0; --t) {
          for (Eigen::Index b = 0; b < batch; ++b) {
            const Eigen::Index r = t * batch + b;
            for (Eigen::Index j = 0; j < H; ++j) {
              const T i = (*gates)(r, j), f = (*gates)(r, H + j), g = (*gates)(r, 2 * H + j), o = (*gates)(r, 3 * H + j);
              const T c = (*cells)(r, j);
              const T c_prev = t > 0 ? (*cells)(r - batch, j) : T{0};
              const T tc = std::tanh(c);
              const T dh = dY(r, j) + dh_next(b, j);
              const T dc = dh * o * (T{1} - tc * tc) + dc_next(b, j);
              dA(r, j) = dc * g * i * (T{1} - i);
              dA(r, H + j) = dc * c_prev * f * (T{1} - f);
              dA(r, 2 * H + j) = dc * i * (T{1} - g * g);
              dA(r, 3 * H + j) = dh * tc * o * (T{1} - o);
              dc_next(b, j) = dc * f;
            }
          }
          dh_next.noalias() = dA.middleRows(t * batch, batch) * Whh;
        }

        if (px.requires_grad) {
          MatMap<T> dX(px.ensure_grad().data(), steps * batch, D);
          dX.noalias() += dA * ConstMatMap<T>(pwih.value.data(), G, D);
        }
        if (pwih.requires_grad) {
          MatMap<T> dW(pwih.ensure_grad().data(), G, D);
          dW.noalias() += dA.transpose() * ConstMatMap<T>(px.value.data(), steps * batch, D);
        }
        if (pwhh.requires_grad && steps > 1) {
          MatMap<T> dW(pwhh.ensure_grad().data(), G, H);
          // h_{t-1} pairs with the pre-activation gradient of step t.
          dW.noalias() += dA.bottomRows((steps - 1) * batch).transpose() * Hs.topRows((steps - 1) * batch);
        }
        const Eigen::Matrix<T, 1, Eigen::Dynamic> db = dA.colwise().sum();
        if (pbih.requires_grad) {
          Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(pbih.ensure_grad().data(), G) += db;
        }
        if (pbhh.requires_grad) {
          Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(pbhh.ensure_grad().data(), G) += db;
        }
      });
}

// Stack of LSTM layers. Returns every output frame of the top layer; the last
// hidden state is its final row.
template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const std::vector<LstmWeights<T>>& layers) {
  if (layers.empty()) throw InvalidConfig("lstm_forward: at least one layer required");
  Tensor<T> h = x;
  for (const auto& layer : layers) h = lstm_layer(h, layer);
  return h;
}

template <typename T>
Tensor<T> last_frame(const Tensor<T>& sequence) {
  const std::size_t steps = sequence.dim(0);
  Tensor<T> last = slice_first(sequence, steps - 1, steps);
  Shape shape(sequence.shape().begin() + 1, sequence.shape().end());
  return reshape(last, shape);
}

}  // namespace ptfse::diff
