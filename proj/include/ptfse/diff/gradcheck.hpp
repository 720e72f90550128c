#pragma once

#include <algorithm>
#include <cmath>

#include "ptfse/diff/tensor.hpp"

namespace ptfse::diff {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares the reverse-mode gradient of f at x with central differences.
// x is perturbed in place, so f may read x through its argument or through
// any handle that shares its node (e.g. a model parameter).
template <typename T, typename F>
GradCheckResult grad_check_detailed(const F& f, Tensor<T> x, double fd_step) {
  const bool had = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  backward(f(x));
  std::vector<T> analytic(x.grad().begin(), x.grad().end());
  const T h = static_cast<T>(fd_step);

  GradCheckResult result;
  auto values = x.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T saved = values[i];
    values[i] = saved + h;
    const T up = f(x).item();
    values[i] = saved - h;
    const T down = f(x).item();
    values[i] = saved;
    const T numeric = (up - down) / (T{2} * h);
    const T a = analytic[i];
    const T err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), T{1e-8}});
    if (i == 0 || err > result.max_relative_error)
      result = {static_cast<double>(err), i, static_cast<double>(a), static_cast<double>(numeric)};
  }
  x.zero_grad();
  x.set_requires_grad(had);
  return result;
}

template <typename T, typename F>
double grad_check(const F& f, Tensor<T> x, double fd_step) {
  return grad_check_detailed(f, std::move(x), fd_step).max_relative_error;
}

}  // namespace ptfse::diff
