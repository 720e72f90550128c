#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ptfse/diff/tensor.hpp"

namespace ptfse::diff {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// Numerically stable scalar activations.
template <typename T>
T stable_sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

namespace detail {

template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& a, const char* name, Fwd fwd, Deriv deriv_from_output) {
  std::vector<T> out(a.size());
  auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr()}, name,
                        [deriv_from_output](Node<T>& self) {
                          auto& pa = *self.parents[0];
                          if (!pa.requires_grad) return;
                          auto& g = pa.ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i)
                            g[i] += self.grad[i] * deriv_from_output(pa.value[i], self.value[i]);
                        });
}

template <typename T>
void accumulate(Node<T>& parent, const std::vector<T>& grad, T scale = T{1}) {
  if (!parent.requires_grad) return;
  auto& g = parent.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * grad[i];
}

}  // namespace detail

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return detail::unary(
      a, "sigmoid", [](T x) { return stable_sigmoid(x); }, [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return detail::unary(
      a, "tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

// relu'(0) is taken as 0.
template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return detail::unary(
      a, "relu", [](T x) { return x > T{0} ? x : T{0}; }, [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  return detail::unary(
      a, "scale", [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return detail::unary(
      a, "square", [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()}, "add", [](Node<T>& self) {
    detail::accumulate(*self.parents[0], self.grad);
    detail::accumulate(*self.parents[1], self.grad);
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()}, "sub", [](Node<T>& self) {
    detail::accumulate(*self.parents[0], self.grad);
    detail::accumulate(*self.parents[1], self.grad, T{-1});
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()}, "mul", [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc{0};
  for (T v : a.values()) acc += v;
  return make_result<T>({1}, {acc}, {a.node_ptr()}, "sum", [](Node<T>& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  T acc{0};
  for (T v : a.values()) acc += v;
  const T inv = T{1} / static_cast<T>(a.size());
  return make_result<T>({1}, {acc / static_cast<T>(a.size())}, {a.node_ptr()}, "mean", [inv](Node<T>& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (auto& v : g) v += self.grad[0] * inv;
  });
}

// Same elements, new shape.
template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  std::vector<T> out(a.values().begin(), a.values().end());
  return make_result<T>(std::move(shape), std::move(out), {a.node_ptr()}, "reshape", [](Node<T>& self) {
    detail::accumulate(*self.parents[0], self.grad);
  });
}

// Concatenates along the last dimension; leading dimensions must agree.
template <typename T>
Tensor<T> concat_last(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_last: no inputs");
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape l = p.shape();
    const std::size_t w = l.back();
    l.pop_back();
    if (l != lead)
      throw ShapeError("concat_last: shape mismatch " + to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
    widths.push_back(w);
    total += w;
  }
  const std::size_t rows = numel(lead);
  std::vector<T> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.begin() + r * widths[k], widths[k], out.begin() + r * total + offset);
    offset += widths[k];
  }
  Shape shape = lead;
  shape.push_back(total);
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const auto& p : parts) parents.push_back(p.node_ptr());
  return make_result<T>(std::move(shape), std::move(out), std::move(parents), "concat_last",
                        [widths, rows, total](Node<T>& self) {
                          std::size_t off = 0;
                          for (std::size_t k = 0; k < widths.size(); ++k) {
                            auto& p = *self.parents[k];
                            if (p.requires_grad) {
                              auto& g = p.ensure_grad();
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t c = 0; c < widths[k]; ++c)
                                  g[r * widths[k] + c] += self.grad[r * total + off + c];
                            }
                            off += widths[k];
                          }
                        });
}

// Concatenates along the first dimension; trailing dimensions must agree.
template <typename T>
Tensor<T> concat_first(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_first: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t lead = 0;
  std::vector<T> out;
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const auto& p : parts) {
    if (Shape(p.shape().begin() + 1, p.shape().end()) != tail)
      throw ShapeError("concat_first: shape mismatch " + to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
    lead += p.dim(0);
    out.insert(out.end(), p.values().begin(), p.values().end());
    parents.push_back(p.node_ptr());
  }
  Shape shape{lead};
  shape.insert(shape.end(), tail.begin(), tail.end());
  return make_result<T>(std::move(shape), std::move(out), std::move(parents), "concat_first", [](Node<T>& self) {
    std::size_t off = 0;
    for (auto& pp : self.parents) {
      if (pp->requires_grad) {
        auto& g = pp->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[off + i];
      }
      off += pp->value.size();
    }
  });
}

// Rows [begin, end) of the first dimension.
template <typename T>
Tensor<T> slice_first(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.dim(0))
    throw ShapeError("slice_first: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of " + to_string(a.shape()));
  const std::size_t inner = a.size() / a.dim(0);
  std::vector<T> out(a.values().begin() + begin * inner, a.values().begin() + end * inner);
  Shape shape = a.shape();
  shape[0] = end - begin;
  return make_result<T>(std::move(shape), std::move(out), {a.node_ptr()}, "slice_first",
                        [begin, inner](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          auto& g = p.ensure_grad();
                          for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * inner + i] += self.grad[i];
                        });
}

// out[0] = 0, out[t] = a[t-1]: the sequence delayed by one step.
template <typename T>
Tensor<T> delay_first(const Tensor<T>& a) {
  const std::size_t inner = a.size() / a.dim(0);
  std::vector<T> out(a.size(), T{0});
  std::copy(a.values().begin(), a.values().end() - inner, out.begin() + inner);
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr()}, "delay_first", [inner](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i + inner < g.size(); ++i) g[i] += self.grad[i + inner];
  });
}

// Moves the last axis to the front: [A, ..., C] -> [C, A, ...].
template <typename T>
Tensor<T> last_to_front(const Tensor<T>& a) {
  const std::size_t c = a.shape().back();
  const std::size_t rows = a.size() / c;
  std::vector<T> out(a.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < c; ++k) out[k * rows + r] = a.values()[r * c + k];
  Shape shape{c};
  shape.insert(shape.end(), a.shape().begin(), a.shape().end() - 1);
  return make_result<T>(std::move(shape), std::move(out), {a.node_ptr()}, "last_to_front",
                        [rows, c](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          auto& g = p.ensure_grad();
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t k = 0; k < c; ++k) g[r * c + k] += self.grad[k * rows + r];
                        });
}

// Fully connected layer over the last dimension: out = x W^T + b.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(0) ||
      x.shape().back() != weight.dim(1))
    throw ShapeError("linear: x " + to_string(x.shape()) + " incompatible with weight " +
                     to_string(weight.shape()) + " and bias " + to_string(bias.shape()));
  const auto d_out = static_cast<Eigen::Index>(weight.dim(0));
  const auto d_in = static_cast<Eigen::Index>(weight.dim(1));
  const auto rows = static_cast<Eigen::Index>(x.size() / d_in);
  std::vector<T> out(static_cast<std::size_t>(rows * d_out));
  ConstMatMap<T> X(x.values().data(), rows, d_in);
  ConstMatMap<T> W(weight.values().data(), d_out, d_in);
  MatMap<T> Y(out.data(), rows, d_out);
  Y.noalias() = X * W.transpose();
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.values().data(), d_out);
  Y.rowwise() += b;
  Shape shape = x.shape();
  shape.back() = static_cast<std::size_t>(d_out);
  return make_result<T>(std::move(shape), std::move(out), {x.node_ptr(), weight.node_ptr(), bias.node_ptr()},
                        "linear", [rows, d_in, d_out](Node<T>& self) {
                          auto& px = *self.parents[0];
                          auto& pw = *self.parents[1];
                          auto& pb = *self.parents[2];
                          ConstMatMap<T> G(self.grad.data(), rows, d_out);
                          if (px.requires_grad) {
                            MatMap<T> GX(px.ensure_grad().data(), rows, d_in);
                            GX.noalias() += G * ConstMatMap<T>(pw.value.data(), d_out, d_in);
                          }
                          if (pw.requires_grad) {
                            MatMap<T> GW(pw.ensure_grad().data(), d_out, d_in);
                            GW.noalias() += G.transpose() * ConstMatMap<T>(px.value.data(), rows, d_in);
                          }
                          if (pb.requires_grad) {
                            Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(pb.ensure_grad().data(), d_out);
                            gb += G.colwise().sum();
                          }
                        });
}

// Mean over member sets along the last dimension: out[.., g] = mean of
// x[.., i] for i in groups[g]. Every group must be non-empty.
template <typename T>
Tensor<T> group_mean_last(const Tensor<T>& x, const std::vector<std::vector<std::size_t>>& groups) {
  const std::size_t width = x.shape().back();
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidConfig("group_mean_last: empty group");
    for (auto i : g)
      if (i >= width) throw ShapeError("group_mean_last: index " + std::to_string(i) + " outside width " + std::to_string(width));
  }
  if (groups.empty()) throw InvalidConfig("group_mean_last: no groups");
  const std::size_t rows = x.size() / width;
  const std::size_t ng = groups.size();
  std::vector<T> out(rows * ng);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t g = 0; g < ng; ++g) {
      T acc{0};
      for (auto i : groups[g]) acc += x.values()[r * width + i];
      out[r * ng + g] = acc / static_cast<T>(groups[g].size());
    }
  Shape shape = x.shape();
  shape.back() = ng;
  return make_result<T>(std::move(shape), std::move(out), {x.node_ptr()}, "group_mean_last",
                        [groups, rows, width, ng](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          auto& gr = p.ensure_grad();
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t g = 0; g < ng; ++g) {
                              const T share = self.grad[r * ng + g] / static_cast<T>(groups[g].size());
                              for (auto i : groups[g]) gr[r * width + i] += share;
                            }
                        });
}

// Non-overlapping average pooling along the last dimension.
template <typename T>
Tensor<T> avg_pool_freq(const Tensor<T>& x, std::size_t step) {
  const std::size_t width = x.shape().back();
  if (step == 0 || width % step != 0)
    throw InvalidConfig("avg_pool_freq: step " + std::to_string(step) + " does not divide width " + std::to_string(width));
  std::vector<std::vector<std::size_t>> groups(width / step);
  for (std::size_t i = 0; i < width; ++i) groups[i / step].push_back(i);
  return group_mean_last(x, groups);
}

// Plain mean squared error between equally shaped tensors.
template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mse");
  return mean(square(sub(a, b)));
}

}  // namespace ptfse::diff
