#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gentrap/error.hpp"
#include "gentrap/numerics/kernels.hpp"
#include "gentrap/numerics/tensor.hpp"

namespace gentrap::nx {

namespace detail {

struct AxisSplit {
  std::size_t outer;
  std::size_t len;
  std::size_t inner;
};

inline AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

template <class T, class Fwd, class Deriv>
Tensor<T> unary(const Tensor<T>& x, Fwd fwd, Deriv deriv) {
  std::vector<T> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [deriv](Node<T>& self) {
    const auto& in = self.parents[0]->value;
    T* gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * deriv(in[i], self.value[i]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

/// a[..., n, k] x b[k, m] -> [..., n, m], or batched a[B..., n, k] x b[B..., k, m]
/// with equal leading dimensions.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  const auto mismatch = [&] { return DimensionError("matmul: incompatible shapes " + shape_string(as) + " x " + shape_string(bs)); };
  if (as.size() < 2 || bs.size() < 2) throw mismatch();
  const std::size_t k = as.back();
  if (bs[bs.size() - 2] != k) throw mismatch();
  const std::size_t n_cols = bs.back();

  if (bs.size() == 2) {
    const std::size_t rows = a.size() / k;
    Shape out_shape(as.begin(), as.end() - 1);
    out_shape.push_back(n_cols);
    std::vector<T> out(rows * n_cols, T{0});
    kernels::gemm_nn(a.values().data(), b.values().data(), out.data(), rows, k, n_cols);
    return Tensor<T>::make_result(std::move(out_shape), std::move(out), {a, b}, [rows, k, n_cols](Node<T>& self) {
      const T* av = self.parents[0]->value.data();
      const T* bv = self.parents[1]->value.data();
      if (T* ga = parent_grad(self, 0)) kernels::gemm_nt(self.grad.data(), bv, ga, rows, n_cols, k);
      if (T* gb = parent_grad(self, 1)) kernels::gemm_tn(av, self.grad.data(), gb, rows, k, n_cols);
    });
  }

  if (as.size() != bs.size() || !std::equal(as.begin(), as.end() - 2, bs.begin())) throw mismatch();
  const std::size_t n_rows = as[as.size() - 2];
  const std::size_t batch = a.size() / (n_rows * k);
  Shape out_shape(as.begin(), as.end() - 1);
  out_shape.push_back(n_cols);
  std::vector<T> out(batch * n_rows * n_cols, T{0});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    kernels::gemm_nn(a.values().data() + bi * n_rows * k, b.values().data() + bi * k * n_cols,
                     out.data() + bi * n_rows * n_cols, n_rows, k, n_cols);
  }
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {a, b}, [batch, n_rows, k, n_cols](Node<T>& self) {
    const T* av = self.parents[0]->value.data();
    const T* bv = self.parents[1]->value.data();
    T* ga = parent_grad(self, 0);
    T* gb = parent_grad(self, 1);
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const T* g = self.grad.data() + bi * n_rows * n_cols;
      if (ga) kernels::gemm_nt(g, bv + bi * k * n_cols, ga + bi * n_rows * k, n_rows, n_cols, k);
      if (gb) kernels::gemm_tn(av + bi * n_rows * k, g, gb + bi * k * n_cols, n_rows, k, n_cols);
    }
  });
}

/// Swaps the last two axes.
/// x[..., k] * w[k, n] + b[n] as one node.
template <class T>
Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() == 0 || w.rank() != 2 || x.shape().back() != w.dim(0) || b.size() != w.dim(1))
    throw DimensionError("affine: incompatible shapes " + shape_string(x.shape()) + " x " + shape_string(w.shape()) + " + " +
                         shape_string(b.shape()));
  const std::size_t k = w.dim(0), n = w.dim(1), rows = x.size() / k;
  Shape out_shape = x.shape();
  out_shape.back() = n;
  std::vector<T> out(rows * n);
  const auto bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(r * n));
  kernels::gemm_nn(x.values().data(), w.values().data(), out.data(), rows, k, n);
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {x, w, b}, [rows, k, n](Node<T>& self) {
    const T* g = self.grad.data();
    if (T* gx = parent_grad(self, 0)) kernels::gemm_nt(g, self.parents[1]->value.data(), gx, rows, n, k);
    if (T* gw = parent_grad(self, 1)) kernels::gemm_tn(self.parents[0]->value.data(), g, gw, rows, k, n);
    if (T* gb = parent_grad(self, 2))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
  });
}

template <class T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
  const auto& s = x.shape();
  if (s.size() < 2) throw DimensionError("transpose_last2 needs rank >= 2, got " + shape_string(s));
  const std::size_t r = s[s.size() - 2], c = s.back(), batch = x.size() / (r * c);
  Shape out_shape = s;
  std::swap(out_shape[s.size() - 2], out_shape[s.size() - 1]);
  std::vector<T> out(x.size());
  const auto xv = x.values();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = xv[b * r * c + i * c + j];
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {x}, [batch, r, c](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[b * r * c + i * c + j] += self.grad[b * r * c + j * r + i];
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (T* g = parent_grad(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    if (T* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (T* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (T* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    if (T* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return detail::unary(x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

/// x[..., n] + bias[n]
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t n = bias.size();
  if (x.rank() == 0 || x.shape().back() != n)
    throw DimensionError("add_bias: " + shape_string(x.shape()) + " + " + shape_string(bias.shape()));
  std::vector<T> out(x.size());
  const auto xv = x.values();
  const auto bv = bias.values();
  const std::size_t rows = out.size() / n;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] + bv[j];
  return Tensor<T>::make_result(x.shape(), std::move(out), {x, bias}, [n, rows](Node<T>& self) {
    if (T* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (T* g = parent_grad(self, 1))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[r * n + j];
  });
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  return detail::unary(x, [](T v) { return v > T{0} ? v : T{0}; }, [](T in, T) { return in > T{0} ? T{1} : T{0}; });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return T{1} / (T{1} + std::exp(-v)); }, [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  return detail::unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <class T>
Tensor<T> square(const Tensor<T>& x) {
  return detail::unary(x, [](T v) { return v * v; }, [](T in, T) { return T{2} * in; });
}

/// Row-wise softmax over the last axis (max-shifted).
template <class T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  std::vector<T> out(x.size());
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * n;
    T* o = out.data() + r * n;
    T mx = in[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
    T sum{0};
    for (std::size_t j = 0; j < n; ++j) sum += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= sum;
  }
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [rows, n](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * n;
      const T* gy = self.grad.data() + r * n;
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[j] * (gy[j] - dot);
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions

template <class T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T s{0};
  for (T v : x.values()) s += v;
  return Tensor<T>::make_result({1}, {s}, {x}, [](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    const T g = self.grad[0];
    for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) gx[i] += g;
  });
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& x) {
  return scale(sum_all(x), T{1} / static_cast<T>(x.size()));
}

/// Arithmetic mean along `axis`, which is removed from the shape.
template <class T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis) {
  const auto s = detail::split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<T> out(s.outer * s.inner, T{0});
  const auto xv = x.values();
  const T inv = T{1} / static_cast<T>(s.len);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = 0; l < s.len; ++l)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += xv[(o * s.len + l) * s.inner + i];
    for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] *= inv;
  }
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {x}, [s, inv](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t l = 0; l < s.len; ++l)
        for (std::size_t i = 0; i < s.inner; ++i) gx[(o * s.len + l) * s.inner + i] += self.grad[o * s.inner + i] * inv;
  });
}

/// Elementwise max along `axis` (removed). The gradient of each output element
/// flows to the first index attaining the max.
template <class T>
Tensor<T> max_axis(const Tensor<T>& x, std::size_t axis) {
  const auto s = detail::split_at(x.shape(), axis);
  if (s.len == 0) throw PreconditionError("max_axis over an empty axis");
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<T> out(s.outer * s.inner);
  std::vector<std::size_t> arg(out.size(), 0);
  const auto xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = 0;
      T bv = xv[o * s.len * s.inner + i];
      for (std::size_t l = 1; l < s.len; ++l) {
        const T v = xv[(o * s.len + l) * s.inner + i];
        if (v > bv) {
          bv = v;
          best = l;
        }
      }
      out[o * s.inner + i] = bv;
      arg[o * s.inner + i] = best;
    }
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {x}, [s, arg = std::move(arg)](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t idx = o * s.inner + i;
        gx[(o * s.len + arg[idx]) * s.inner + i] += self.grad[idx];
      }
  });
}

/// Elementwise max across a set of same-shape tensors; ties route the
/// gradient to the lowest set index.
template <class T>
Tensor<T> elementwise_max_over_set(const std::vector<Tensor<T>>& set) {
  if (set.empty()) throw PreconditionError("elementwise_max_over_set needs at least one tensor");
  for (const auto& t : set) detail::require_same_shape(set[0].shape(), t.shape(), "elementwise_max_over_set");
  const std::size_t n = set[0].size();
  std::vector<T> out(set[0].values().begin(), set[0].values().end());
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t s = 1; s < set.size(); ++s) {
    const auto v = set[s].values();
    for (std::size_t i = 0; i < n; ++i)
      if (v[i] > out[i]) {
        out[i] = v[i];
        arg[i] = s;
      }
  }
  return Tensor<T>::make_result(set[0].shape(), std::move(out), set, [arg = std::move(arg)](Node<T>& self) {
    for (std::size_t i = 0; i < arg.size(); ++i)
      if (T* g = parent_grad(self, arg[i])) g[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (element_count(shape) != x.size())
    throw DimensionError("reshape " + shape_string(x.shape()) + " -> " + shape_string(shape));
  std::vector<T> out(x.values().begin(), x.values().end());
  return Tensor<T>::make_result(std::move(shape), std::move(out), {x}, [](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

/// General axis permutation: out.shape[i] = x.shape[perm[i]].
template <class T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  const auto& s = x.shape();
  const std::size_t r = s.size();
  if (perm.size() != r) throw DimensionError("permute: rank mismatch for " + shape_string(s));
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * s[i];
  Shape out_shape(r);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = s.at(perm[i]);
    src_stride[i] = in_stride[perm[i]];
  }
  std::vector<std::size_t> index_map(x.size());
  std::vector<std::size_t> counter(r, 0);
  for (std::size_t flat = 0; flat < x.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < r; ++i) src += counter[i] * src_stride[i];
    index_map[flat] = src;
    for (std::size_t i = r; i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  std::vector<T> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[index_map[i]];
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {x}, [index_map = std::move(index_map)](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < index_map.size(); ++i) gx[index_map[i]] += self.grad[i];
  });
}

/// Picks index `index` along `axis`, removing that axis.
template <class T>
Tensor<T> select(const Tensor<T>& x, std::size_t axis, std::size_t index) {
  const auto s = detail::split_at(x.shape(), axis);
  if (index >= s.len) throw DimensionError("select: index out of range for " + shape_string(x.shape()));
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<T> out(s.outer * s.inner);
  const auto xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(xv.data() + (o * s.len + index) * s.inner, s.inner, out.data() + o * s.inner);
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {x}, [s, index](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) gx[(o * s.len + index) * s.inner + i] += self.grad[o * s.inner + i];
  });
}

/// Stacks same-shape tensors along a new axis.
template <class T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw PreconditionError("stack of an empty list");
  const Shape& base = parts[0].shape();
  for (const auto& p : parts) detail::require_same_shape(base, p.shape(), "stack");
  if (axis > base.size()) throw DimensionError("stack: axis out of range");
  Shape out_shape = base;
  out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), parts.size());
  const auto s = detail::split_at(out_shape, axis);
  std::vector<T> out(s.outer * s.len * s.inner);
  for (std::size_t l = 0; l < s.len; ++l) {
    const auto pv = parts[l].values();
    for (std::size_t o = 0; o < s.outer; ++o)
      std::copy_n(pv.data() + o * s.inner, s.inner, out.data() + (o * s.len + l) * s.inner);
  }
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), parts, [s](Node<T>& self) {
    for (std::size_t l = 0; l < s.len; ++l)
      if (T* g = parent_grad(self, l))
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t i = 0; i < s.inner; ++i) g[o * s.inner + i] += self.grad[(o * s.len + l) * s.inner + i];
  });
}

/// Concatenates along the last axis; leading dimensions must agree.
template <class T>
Tensor<T> concat_lastdim(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw PreconditionError("concat_lastdim of an empty list");
  Shape lead(parts[0].shape().begin(), parts[0].shape().end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (!std::equal(lead.begin(), lead.end(), p.shape().begin()) || p.rank() != lead.size() + 1)
      throw DimensionError("concat_lastdim: " + shape_string(parts[0].shape()) + " vs " + shape_string(p.shape()));
    widths.push_back(p.shape().back());
    total += widths.back();
  }
  const std::size_t rows = element_count(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  std::vector<T> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto pv = parts[p].values();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(pv.data() + r * widths[p], widths[p], out.data() + r * total + offset);
    offset += widths[p];
  }
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), parts, [rows, total, widths](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      if (T* g = parent_grad(self, p))
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < widths[p]; ++j) g[r * widths[p] + j] += self.grad[r * total + off + j];
      off += widths[p];
    }
  });
}

/// Columns [start, start+len) of the last axis.
template <class T>
Tensor<T> slice_lastdim(const Tensor<T>& x, std::size_t start, std::size_t len) {
  const std::size_t n = x.shape().back();
  if (start + len > n) throw DimensionError("slice_lastdim out of range for " + shape_string(x.shape()));
  const std::size_t rows = x.size() / n;
  Shape out_shape = x.shape();
  out_shape.back() = len;
  std::vector<T> out(rows * len);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * n + start, len, out.data() + r * len);
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {x}, [rows, n, start, len](Node<T>& self) {
    T* gx = parent_grad(self, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < len; ++j) gx[r * n + start + j] += self.grad[r * len + j];
  });
}

/// Inserts a new axis of size `count` at `axis` by repetition.
template <class T>
Tensor<T> repeat_axis(const Tensor<T>& x, std::size_t axis, std::size_t count) {
  if (axis > x.rank()) throw DimensionError("repeat_axis: axis out of range");
  std::vector<Tensor<T>> copies(count, x);
  return stack(copies, axis);
}

// ---------------------------------------------------------------------------
// Encoding

/// ids[i] in [0, depth) -> unit basis row i of a [n, depth] tensor.
template <class T>
Tensor<T> one_hot(std::span<const std::size_t> ids, std::size_t depth) {
  std::vector<T> out(ids.size() * depth, T{0});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= depth) throw PreconditionError("one_hot: id " + std::to_string(ids[i]) + " >= depth " + std::to_string(depth));
    out[i * depth + ids[i]] = T{1};
  }
  return Tensor<T>({ids.size(), depth}, std::move(out));
}

/// Pointwise (kernel width 1) 1-D convolution: a per-time-step affine map.
template <class T>
Tensor<T> conv1d_pointwise(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  if (w.rank() != 2 || x.shape().back() != w.dim(0))
    throw DimensionError("conv1d_pointwise: input " + shape_string(x.shape()) + " vs kernel " + shape_string(w.shape()));
  return affine(x, w, bias);
}

}  // namespace gentrap::nx
