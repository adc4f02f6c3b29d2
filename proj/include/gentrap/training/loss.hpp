#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gentrap/numerics/ops.hpp"

namespace gentrap::train {

inline constexpr double kProbabilityClamp = 1e-12;

/// J = (1/m) Σ [ −y·log(ŷ)·(1−λ) − (1−y)·log(1−ŷ)·λ ], ŷ clamped to
/// [1e-12, 1 − 1e-12]. `y_hat` holds failure probabilities, one per label.
template <class T>
nx::Tensor<T> weighted_cross_entropy(std::span<const int> labels, const nx::Tensor<T>& y_hat, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("weighted_cross_entropy: lambda must lie in (0, 1), got " + std::to_string(lambda));
  const std::size_t m = labels.size();
  if (m == 0 || y_hat.size() != m)
    throw DimensionError("weighted_cross_entropy: " + std::to_string(m) + " labels vs ŷ " + nx::shape_string(y_hat.shape()));
  const auto p = y_hat.values();
  const double lo = kProbabilityClamp, hi = 1.0 - kProbabilityClamp;
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double q = std::clamp(static_cast<double>(p[i]), lo, hi);
    total += labels[i] == 1 ? -std::log(q) * (1.0 - lambda) : -std::log(1.0 - q) * lambda;
  }
  std::vector<int> y(labels.begin(), labels.end());
  return nx::Tensor<T>::make_result({1}, {static_cast<T>(total / static_cast<double>(m))}, {y_hat},
                                    [y = std::move(y), lambda, lo, hi](nx::Node<T>& self) {
                                      T* g = nx::parent_grad(self, 0);
                                      const auto& pv = self.parents[0]->value;
                                      const double scale = static_cast<double>(self.grad[0]) / static_cast<double>(y.size());
                                      for (std::size_t i = 0; i < y.size(); ++i) {
                                        const double q = static_cast<double>(pv[i]);
                                        if (q < lo || q > hi) continue;  // clamped: flat
                                        const double d = y[i] == 1 ? -(1.0 - lambda) / q : lambda / (1.0 - q);
                                        g[i] += static_cast<T>(scale * d);
                                      }
                                    });
}

/// Failure probability column of softmax(logits[B, 2]) as a [B] tensor.
template <class T>
nx::Tensor<T> failure_probability(const nx::Tensor<T>& logits) {
  const auto p = nx::slice_lastdim(nx::softmax_lastdim(logits), 1, 1);
  return nx::reshape(p, {logits.dim(0)});
}

/// Default λ: failure count over non-failure count of the training labels.
inline double class_ratio_lambda(std::span<const int> labels) {
  std::size_t pos = 0;
  for (const int y : labels) pos += y == 1 ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0) throw ConfigError("training split has no failure events; cannot set the loss weight");
  if (neg == 0 || pos >= neg) throw ConfigError("training split has no majority non-failure class; cannot set the loss weight");
  return static_cast<double>(pos) / static_cast<double>(neg);
}

}  // namespace gentrap::train
