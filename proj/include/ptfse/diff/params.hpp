#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ptfse/diff/tensor.hpp"
#include "ptfse/rng.hpp"

namespace ptfse::diff {

// Ordered, named collection of trainable leaves.
template <typename T>
class ParamStore {
 public:
  using Entry = std::pair<std::string, Tensor<T>>;

  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw InvalidConfig("duplicate parameter name " + name);
    t.set_requires_grad(true);
    index_[name] = entries_.size();
    entries_.emplace_back(name, std::move(t));
    return entries_.back().second;
  }

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Tensor<T>& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<T> v(numel(shape));
    for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
    return add(name, Tensor<T>(std::move(shape), std::move(v), true));
  }

  Tensor<T>& add_constant(const std::string& name, Shape shape, T value) {
    const auto n = numel(shape);
    return add(name, Tensor<T>(std::move(shape), std::vector<T>(n, value), true));
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const Tensor<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidConfig("unknown parameter " + name);
    return entries_[it->second].second;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t count() const { return entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
  }

  // Scalars per name prefix up to the first '.', e.g. "gfull".
  std::map<std::string, std::size_t> scalar_count_by_prefix() const {
    std::map<std::string, std::size_t> out;
    for (const auto& [name, t] : entries_) out[name.substr(0, name.find('.'))] += t.size();
    return out;
  }

  void zero_grad() {
    for (auto& [_, t] : entries_) t.zero_grad();
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, t] : entries_) {
      std::vector<U> v(t.values().begin(), t.values().end());
      out.add(name, Tensor<U>(t.shape(), std::move(v), true));
    }
    return out;
  }

  // Copies values from `other` (same names and shapes, any scalar type).
  template <typename U>
  void assign_from(const ParamStore<U>& other) {
    for (const auto& [name, src] : other.entries()) {
      auto& dst = const_cast<Tensor<T>&>(get(name));
      if (dst.shape() != src.shape())
        throw ShapeError("parameter " + name + ": " + to_string(dst.shape()) + " vs " + to_string(src.shape()));
      for (std::size_t i = 0; i < dst.size(); ++i) dst.values()[i] = static_cast<T>(src.values()[i]);
    }
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace ptfse::diff
