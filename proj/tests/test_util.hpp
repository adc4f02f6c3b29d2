#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gentrap/numerics/tensor.hpp"

namespace gentrap::testing {

inline nx::Tensor<double> random_tensor(nx::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(nx::element_count(shape));
  for (auto& e : v) e = dist(rng);
  return nx::Tensor<double>(std::move(shape), std::move(v));
}

inline nx::Tensor<double> leaf(nx::Shape shape, std::vector<double> values) {
  return nx::Tensor<double>(std::move(shape), std::move(values), true);
}

}  // namespace gentrap::testing
