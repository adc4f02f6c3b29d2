#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "gentrap/numerics/parameters.hpp"
#include "gentrap/numerics/tensor.hpp"

namespace gentrap::nx {

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t checked = 0;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-5;
  // Denominator floor: relative error is |a-n| / max(|a|, |n|, floor).
  double magnitude_floor = 1e-3;
  // Per-tensor cap on probed elements (evenly strided); 0 probes all.
  std::size_t max_probes_per_tensor = 0;
};

namespace detail {

inline void fold_probe(GradCheckReport& r, double analytic, double numeric, const GradCheckOptions& o) {
  const double abs_err = std::abs(analytic - numeric);
  const double denom = std::max({std::abs(analytic), std::abs(numeric), o.magnitude_floor});
  r.max_absolute_error = std::max(r.max_absolute_error, abs_err);
  r.max_relative_error = std::max(r.max_relative_error, abs_err / denom);
  ++r.checked;
}

inline std::vector<std::size_t> probe_indices(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (cap == 0 || cap >= n) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  for (std::size_t i = 0; i < cap; ++i) idx.push_back(i * n / cap);
  return idx;
}

}  // namespace detail

/// Compares the reverse-mode gradient of scalar f at x with central
/// differences.
inline GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, const Tensor<double>& x0,
                                  GradCheckOptions opts = {}) {
  Tensor<double> x(x0.shape(), std::vector<double>(x0.values().begin(), x0.values().end()), true);
  f(x).backward();
  const std::vector<double> analytic(x.grad().begin(), x.grad().end());
  GradCheckReport report;
  NoGradGuard guard;
  auto xv = x.mutable_values();
  for (std::size_t i : detail::probe_indices(x.size(), opts.max_probes_per_tensor)) {
    const double saved = xv[i];
    xv[i] = saved + opts.step;
    const double up = f(x).item();
    xv[i] = saved - opts.step;
    const double down = f(x).item();
    xv[i] = saved;
    detail::fold_probe(report, analytic[i], (up - down) / (2.0 * opts.step), opts);
  }
  report.passed = report.max_relative_error < opts.tolerance;
  return report;
}

/// Same comparison over every trainable parameter of a model; `loss`
/// rebuilds the graph from the current parameter values on each call.
inline GradCheckReport grad_check_parameters(const std::function<Tensor<double>()>& loss, ParameterSet<double>& params,
                                             GradCheckOptions opts = {}) {
  params.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& e : params.entries())
    analytic.emplace_back(e.tensor.has_grad() ? std::vector<double>(e.tensor.grad().begin(), e.tensor.grad().end())
                                              : std::vector<double>(e.tensor.size(), 0.0));
  params.zero_grad();
  GradCheckReport report;
  NoGradGuard guard;
  for (std::size_t p = 0; p < params.entries().size(); ++p) {
    auto& entry = params.entries()[p];
    if (!entry.trainable) continue;
    auto w = entry.tensor.mutable_values();
    for (std::size_t i : detail::probe_indices(w.size(), opts.max_probes_per_tensor)) {
      const double saved = w[i];
      w[i] = saved + opts.step;
      const double up = loss().item();
      w[i] = saved - opts.step;
      const double down = loss().item();
      w[i] = saved;
      detail::fold_probe(report, analytic[p][i], (up - down) / (2.0 * opts.step), opts);
    }
  }
  report.passed = report.max_relative_error < opts.tolerance;
  return report;
}

}  // namespace gentrap::nx
