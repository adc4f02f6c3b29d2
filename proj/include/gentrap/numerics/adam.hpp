#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gentrap/numerics/parameters.hpp"

namespace gentrap::nx {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m{};  // one buffer per trainable parameter, in set order
  std::vector<std::vector<T>> v{};
};

/// One bias-corrected Adam update over every trainable parameter, then
/// clears gradients. A trainable parameter without a gradient is an error.
template <class T>
void adam_step(ParameterSet<T>& params, AdamState<T>& state) {
  std::vector<Parameter<T>*> trainable;
  for (auto& e : params.entries())
    if (e.trainable) trainable.push_back(&e);
  for (const auto* p : trainable)
    if (!p->tensor.has_grad()) throw PreconditionError("adam_step: parameter '" + p->name + "' has no gradient");
  if (state.m.empty()) {
    for (const auto* p : trainable) {
      state.m.emplace_back(p->tensor.size(), T{0});
      state.v.emplace_back(p->tensor.size(), T{0});
    }
  }
  if (state.m.size() != trainable.size()) throw PreconditionError("adam_step: optimizer state does not match parameters");

  ++state.step;
  const auto& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T step_size = static_cast<T>(c.learning_rate / correction1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(correction2));
  const T eps = static_cast<T>(c.epsilon);
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    auto& tensor = trainable[i]->tensor;
    auto w = tensor.mutable_values();
    const auto g = tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != w.size()) throw PreconditionError("adam_step: state shape mismatch for " + trainable[i]->name);
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (T{1} - b1) * g[j];
      v[j] = b2 * v[j] + (T{1} - b2) * g[j] * g[j];
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
    tensor.zero_grad();
  }
}

}  // namespace gentrap::nx
