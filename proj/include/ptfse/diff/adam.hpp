#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ptfse/diff/params.hpp"

namespace ptfse::diff {

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// Bias-corrected Adam update on every parameter of `params` using its
// accumulated gradient.
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, double lr) {
  const auto& entries = params.entries();
  if (state.first_moment.empty()) {
    for (const auto& [_, t] : entries) {
      state.first_moment.emplace_back(t.size(), T{0});
      state.second_moment.emplace_back(t.size(), T{0});
    }
  }
  if (state.first_moment.size() != entries.size())
    throw ShapeError("adam: state tracks " + std::to_string(state.first_moment.size()) + " tensors, store has " +
                     std::to_string(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k)
    if (state.first_moment[k].size() != entries[k].second.size())
      throw ShapeError("adam: moment size mismatch for " + entries[k].first);

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T rate = static_cast<T>(lr), eps = static_cast<T>(state.epsilon);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Tensor<T> p = entries[k].second;
    auto value = p.values();
    auto grad = p.grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = grad[i];
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      value[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

// Staged schedule: lr_initial before `switch_epoch`, lr_after from then on.
inline double staged_learning_rate(std::size_t epoch, double lr_initial, double lr_after, std::size_t switch_epoch) {
  return epoch < switch_epoch ? lr_initial : lr_after;
}

}  // namespace ptfse::diff
