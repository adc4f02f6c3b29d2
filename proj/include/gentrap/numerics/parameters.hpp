#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "gentrap/numerics/tensor.hpp"

namespace gentrap::nx {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
  bool trainable = true;  // false for running statistics and similar buffers
};

/// Named, insertion-ordered parameters and buffers of one model.
template <class T>
class ParameterSet {
 public:
  Tensor<T>& add(const std::string& name, Shape shape, std::vector<T> values, bool trainable = true) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    entries_.push_back({name, Tensor<T>(std::move(shape), std::move(values), trainable), trainable});
    return entries_.back().tensor;
  }

  Tensor<T>& add_zeros(const std::string& name, Shape shape, bool trainable = true) {
    const auto n = element_count(shape);
    return add(name, std::move(shape), std::vector<T>(n, T{0}), trainable);
  }

  Tensor<T>& add_constant(const std::string& name, Shape shape, T fill, bool trainable = true) {
    const auto n = element_count(shape);
    return add(name, std::move(shape), std::vector<T>(n, fill), trainable);
  }

  /// Glorot-uniform initialised matrix [fan_in, fan_out].
  Tensor<T>& add_glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<T> v(fan_in * fan_out);
    for (auto& e : v) e = static_cast<T>(dist(rng));
    return add(name, {fan_in, fan_out}, std::move(v));
  }

  const Parameter<T>* find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e;
    return nullptr;
  }

  Tensor<T>& at(const std::string& name) {
    for (auto& e : entries_)
      if (e.name == name) return e.tensor;
    throw ConfigError("unknown parameter: " + name);
  }

  std::vector<Parameter<T>>& entries() { return entries_; }
  const std::vector<Parameter<T>>& entries() const { return entries_; }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (e.trainable) n += e.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  /// Value snapshot, for best-checkpoint retention.
  std::vector<std::vector<T>> snapshot() const {
    std::vector<std::vector<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
    return out;
  }

  void restore(const std::vector<std::vector<T>>& snap) {
    if (snap.size() != entries_.size()) throw ConfigError("snapshot does not match parameter set");
    for (std::size_t i = 0; i < snap.size(); ++i) {
      auto dst = entries_[i].tensor.mutable_values();
      if (dst.size() != snap[i].size()) throw ConfigError("snapshot size mismatch for " + entries_[i].name);
      std::copy(snap[i].begin(), snap[i].end(), dst.begin());
    }
  }

 private:
  std::vector<Parameter<T>> entries_;
};

}  // namespace gentrap::nx
