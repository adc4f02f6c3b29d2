#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gentrap/numerics/ops.hpp"

namespace gentrap::nx {

enum class Mode { train, infer };

template <class T>
struct BatchNormParams {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;  // mutated in train mode
  Tensor<T> running_var;
  T momentum = T(0.1);
  T epsilon = T(1e-5);
};

/// Normalizes each feature channel (last axis) over every leading position.
/// Train mode uses batch moments and updates the running estimates; infer
/// mode uses the running estimates.
template <class T>
Tensor<T> batch_norm_features(const Tensor<T>& x, BatchNormParams<T>& p, Mode mode) {
  const std::size_t f = x.shape().back();
  if (p.gamma.size() != f || p.beta.size() != f || p.running_mean.size() != f || p.running_var.size() != f)
    throw DimensionError("batch_norm_features: " + std::to_string(f) + " channels vs gamma " + shape_string(p.gamma.shape()));
  const std::size_t n = x.size() / f;
  const auto xv = x.values();
  std::vector<T> mean(f, T{0}), inv_std(f);
  if (mode == Mode::train) {
    std::vector<T> var(f, T{0});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < f; ++c) mean[c] += xv[r * f + c];
    for (auto& m : mean) m /= static_cast<T>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < f; ++c) {
        const T d = xv[r * f + c] - mean[c];
        var[c] += d * d;
      }
    for (auto& v : var) v /= static_cast<T>(n);
    auto rm = p.running_mean.mutable_values();
    auto rv = p.running_var.mutable_values();
    const T unbias = n > 1 ? static_cast<T>(n) / static_cast<T>(n - 1) : T{1};
    for (std::size_t c = 0; c < f; ++c) {
      inv_std[c] = T{1} / std::sqrt(var[c] + p.epsilon);
      rm[c] = (T{1} - p.momentum) * rm[c] + p.momentum * mean[c];
      rv[c] = (T{1} - p.momentum) * rv[c] + p.momentum * var[c] * unbias;
    }
  } else {
    const auto rm = p.running_mean.values();
    const auto rv = p.running_var.values();
    for (std::size_t c = 0; c < f; ++c) {
      mean[c] = rm[c];
      inv_std[c] = T{1} / std::sqrt(rv[c] + p.epsilon);
    }
  }
  std::vector<T> xhat(x.size()), out(x.size());
  const auto g = p.gamma.values();
  const auto b = p.beta.values();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const std::size_t i = r * f + c;
      xhat[i] = (xv[i] - mean[c]) * inv_std[c];
      out[i] = g[c] * xhat[i] + b[c];
    }
  const bool batch_stats = mode == Mode::train;
  return Tensor<T>::make_result(
      x.shape(), std::move(out), {x, p.gamma, p.beta},
      [n, f, batch_stats, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        const auto& gamma = self.parents[1]->value;
        const auto& dy = self.grad;
        if (T* gg = parent_grad(self, 1))
          for (std::size_t i = 0; i < n * f; ++i) gg[i % f] += dy[i] * xhat[i];
        if (T* gb = parent_grad(self, 2))
          for (std::size_t i = 0; i < n * f; ++i) gb[i % f] += dy[i];
        T* gx = parent_grad(self, 0);
        if (!gx) return;
        if (!batch_stats) {
          for (std::size_t i = 0; i < n * f; ++i) gx[i] += dy[i] * gamma[i % f] * inv_std[i % f];
          return;
        }
        std::vector<T> sum_d(f, T{0}), sum_dx(f, T{0});
        for (std::size_t i = 0; i < n * f; ++i) {
          const T d = dy[i] * gamma[i % f];
          sum_d[i % f] += d;
          sum_dx[i % f] += d * xhat[i];
        }
        const T inv_n = T{1} / static_cast<T>(n);
        for (std::size_t i = 0; i < n * f; ++i) {
          const std::size_t c = i % f;
          const T d = dy[i] * gamma[c];
          gx[i] += inv_std[c] * (d - inv_n * sum_d[c] - xhat[i] * inv_n * sum_dx[c]);
        }
      });
}

/// softmax(q k^T / sqrt(d)) v per head, for q, k, v [batch, time, heads*head_dim]
/// with heads laid out as contiguous column blocks. Output has q's shape.
template <class T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t heads,
                                       std::size_t head_dim) {
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape() || q.dim(2) != heads * head_dim)
    throw DimensionError("scaled_dot_product_attention: q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) + ", v " +
                         shape_string(v.shape()) + " with " + std::to_string(heads) + "x" + std::to_string(head_dim) + " heads");
  const std::size_t B = q.dim(0), Tm = q.dim(1), W = q.dim(2), D = head_dim;
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(D));
  const auto qv = q.values(), kv = k.values(), vv = v.values();
  std::vector<T> out(q.size(), T{0});
  std::vector<T> probs(B * heads * Tm * Tm);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t base = b * Tm * W + h * D;
      T* P = probs.data() + (b * heads + h) * Tm * Tm;
      for (std::size_t t = 0; t < Tm; ++t) {
        const T* qr = qv.data() + base + t * W;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t s = 0; s < Tm; ++s) {
          const T* kr = kv.data() + base + s * W;
          T dot{0};
          for (std::size_t d = 0; d < D; ++d) dot += qr[d] * kr[d];
          P[t * Tm + s] = dot * inv_sqrt;
          mx = std::max(mx, P[t * Tm + s]);
        }
        T sum{0};
        for (std::size_t s = 0; s < Tm; ++s) sum += (P[t * Tm + s] = std::exp(P[t * Tm + s] - mx));
        T* o = out.data() + base + t * W;
        for (std::size_t s = 0; s < Tm; ++s) {
          const T w = (P[t * Tm + s] /= sum);
          const T* vr = vv.data() + base + s * W;
          for (std::size_t d = 0; d < D; ++d) o[d] += w * vr[d];
        }
      }
    }
  return Tensor<T>::make_result(q.shape(), std::move(out), {q, k, v},
                                [B, Tm, W, D, heads, inv_sqrt, probs = std::move(probs)](Node<T>& self) {
    const auto& qv = self.parents[0]->value;
    const auto& kv = self.parents[1]->value;
    const auto& vv = self.parents[2]->value;
    T* gq = parent_grad(self, 0);
    T* gk = parent_grad(self, 1);
    T* gv = parent_grad(self, 2);
    std::vector<T> dP(Tm * Tm);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t base = b * Tm * W + h * D;
        const T* P = probs.data() + (b * heads + h) * Tm * Tm;
        for (std::size_t t = 0; t < Tm; ++t) {
          const T* go = self.grad.data() + base + t * W;
          for (std::size_t s = 0; s < Tm; ++s) {
            const T* vr = vv.data() + base + s * W;
            T dot{0};
            for (std::size_t d = 0; d < D; ++d) dot += go[d] * vr[d];
            dP[t * Tm + s] = dot;
            if (gv) {
              T* g = gv + base + s * W;
              const T w = P[t * Tm + s];
              for (std::size_t d = 0; d < D; ++d) g[d] += w * go[d];
            }
          }
        }
        if (!gq && !gk) continue;
        for (std::size_t t = 0; t < Tm; ++t) {
          T inner{0};
          for (std::size_t s = 0; s < Tm; ++s) inner += P[t * Tm + s] * dP[t * Tm + s];
          const T* qr = qv.data() + base + t * W;
          for (std::size_t s = 0; s < Tm; ++s) {
            const T ds = P[t * Tm + s] * (dP[t * Tm + s] - inner) * inv_sqrt;
            const T* kr = kv.data() + base + s * W;
            if (gq) {
              T* g = gq + base + t * W;
              for (std::size_t d = 0; d < D; ++d) g[d] += ds * kr[d];
            }
            if (gk) {
              T* g = gk + base + s * W;
              for (std::size_t d = 0; d < D; ++d) g[d] += ds * qr[d];
            }
          }
        }
      }
  });
}

template <class T>
struct AttentionParams {
  Tensor<T> wq, bq, wk, bk, wv, bv;  // [feat, heads*head_dim], [heads*head_dim]
  Tensor<T> wo, bo;                  // [heads*head_dim, feat], [feat]
};

/// Multi-head scaled dot-product self-attention over the time axis of
/// x[batch, time, feat]. Output has the input's shape.
template <class T>
Tensor<T> multi_head_attention(const Tensor<T>& x, std::size_t heads, std::size_t head_dim, const AttentionParams<T>& p) {
  if (x.rank() != 3) throw DimensionError("multi_head_attention expects [batch, time, feat], got " + shape_string(x.shape()));
  if (heads == 0 || head_dim == 0) throw ConfigError("multi_head_attention: heads and head_dim must be positive");
  const std::size_t feat = x.dim(2), width = heads * head_dim;
  const Shape proj{feat, width};
  if (p.wq.shape() != proj || p.wk.shape() != proj || p.wv.shape() != proj || p.wo.shape() != Shape{width, feat} ||
      p.bq.size() != width || p.bk.size() != width || p.bv.size() != width || p.bo.size() != feat)
    throw ConfigError("multi_head_attention: projection widths do not match feat=" + std::to_string(feat) +
                      " heads*head_dim=" + std::to_string(width));

  const auto q = affine(x, p.wq, p.bq);
  const auto k = affine(x, p.wk, p.bk);
  const auto v = affine(x, p.wv, p.bv);
  return affine(scaled_dot_product_attention(q, k, v, heads, head_dim), p.wo, p.bo);
}

template <class T>
struct LstmParams {
  Tensor<T> w_input;   // [in, 4*hidden], gate order i, f, g, o
  Tensor<T> w_hidden;  // [hidden, 4*hidden]
  Tensor<T> bias;      // [4*hidden]
};

template <class T>
struct LstmOutput {
  Tensor<T> sequence;     // [batch, time, hidden]
  Tensor<T> last_hidden;  // [batch, hidden]
  Tensor<T> last_cell;    // [batch, hidden]
};

/// One LSTM step on pre-activations pre[B, 4h] (gate order i, f, g, o) and the
/// previous cell state c_prev[B, h]. Returns [B, 2h]: new hidden | new cell.
template <class T>
Tensor<T> lstm_cell(const Tensor<T>& pre, const Tensor<T>& c_prev) {
  if (pre.rank() != 2 || pre.dim(1) % 4 != 0) throw DimensionError("lstm_cell: pre-activations " + shape_string(pre.shape()));
  const std::size_t B = pre.dim(0), h = pre.dim(1) / 4;
  if (c_prev.shape() != Shape{B, h}) throw DimensionError("lstm_cell: cell state " + shape_string(c_prev.shape()));
  const auto pv = pre.values();
  const auto cv = c_prev.values();
  auto gates = std::make_shared<std::vector<T>>(B * 4 * h);  // activated i, f, g, o
  std::vector<T> out(B * 2 * h);
  const auto sig = [](T v) { return T{1} / (T{1} + std::exp(-v)); };
  for (std::size_t b = 0; b < B; ++b) {
    const T* a = pv.data() + b * 4 * h;
    T* gt = gates->data() + b * 4 * h;
    T* o = out.data() + b * 2 * h;
    for (std::size_t u = 0; u < h; ++u) {
      const T ig = sig(a[u]), fg = sig(a[h + u]), cg = std::tanh(a[2 * h + u]), og = sig(a[3 * h + u]);
      gt[u] = ig;
      gt[h + u] = fg;
      gt[2 * h + u] = cg;
      gt[3 * h + u] = og;
      const T c = fg * cv[b * h + u] + ig * cg;
      o[h + u] = c;
      o[u] = og * std::tanh(c);
    }
  }
  return Tensor<T>::make_result({B, 2 * h}, std::move(out), {pre, c_prev}, [gates, B, h](Node<T>& self) {
    T* gpre = parent_grad(self, 0);
    T* gc = parent_grad(self, 1);
    const auto& cprev = self.parents[1]->value;
    for (std::size_t b = 0; b < B; ++b) {
      const T* gt = gates->data() + b * 4 * h;
      const T* y = self.value.data() + b * 2 * h;
      const T* dy = self.grad.data() + b * 2 * h;
      for (std::size_t u = 0; u < h; ++u) {
        const T ig = gt[u], fg = gt[h + u], cg = gt[2 * h + u], og = gt[3 * h + u];
        const T tc = std::tanh(y[h + u]);
        const T dc = dy[h + u] + dy[u] * og * (T{1} - tc * tc);
        if (gpre) {
          T* d = gpre + b * 4 * h;
          d[u] += dc * cg * ig * (T{1} - ig);
          d[h + u] += dc * cprev[b * h + u] * fg * (T{1} - fg);
          d[2 * h + u] += dc * ig * (T{1} - cg * cg);
          d[3 * h + u] += dy[u] * tc * og * (T{1} - og);
        }
        if (gc) gc[b * h + u] += dc * fg;
      }
    }
  });
}

/// One LSTM layer over x[batch, time, feat] from zero initial state.
template <class T>
LstmOutput<T> lstm_layer(const Tensor<T>& x, const LstmParams<T>& p) {
  if (x.rank() != 3) throw DimensionError("lstm_layer expects [batch, time, feat], got " + shape_string(x.shape()));
  const std::size_t hidden = p.w_hidden.dim(0);
  if (p.w_input.rank() != 2 || p.w_input.dim(0) != x.dim(2) || p.w_input.dim(1) != 4 * hidden ||
      p.w_hidden.shape() != Shape{hidden, 4 * hidden} || p.bias.size() != 4 * hidden)
    throw DimensionError("lstm_layer: input " + shape_string(x.shape()) + " vs w_input " + shape_string(p.w_input.shape()));
  const std::size_t time = x.dim(1);
  const auto projected = affine(x, p.w_input, p.bias);  // [B,T,4h]
  std::vector<Tensor<T>> outputs;
  outputs.reserve(time);
  Tensor<T> h, c = Tensor<T>::zeros({x.dim(0), hidden});
  for (std::size_t t = 0; t < time; ++t) {
    auto pre = select(projected, 1, t);
    if (t > 0) pre = add(pre, matmul(h, p.w_hidden));
    const auto hc = lstm_cell(pre, c);
    h = slice_lastdim(hc, 0, hidden);
    c = slice_lastdim(hc, hidden, hidden);
    outputs.push_back(h);
  }
  return {stack(outputs, 1), h, c};
}

}  // namespace gentrap::nx
