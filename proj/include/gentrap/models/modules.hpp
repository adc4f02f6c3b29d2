#pragma once

#include <random>
#include <string>
#include <vector>

#include "gentrap/models/config.hpp"
#include "gentrap/numerics/layers.hpp"
#include "gentrap/numerics/parameters.hpp"

namespace gentrap::models {

using nx::Mode;
using nx::ParameterSet;
using nx::Tensor;

template <class T>
struct Linear {
  Tensor<T> w;  // [in, out]
  Tensor<T> b;  // [out]

  static Linear make(ParameterSet<T>& ps, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
    Linear l;
    l.w = ps.add_glorot(name + ".w", in, out, rng);
    l.b = ps.add_zeros(name + ".b", {out});
    return l;
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return nx::affine(x, w, b); }
};

/// Two dense layers with a ReLU between them; optionally ReLU on the output.
template <class T>
struct FeedForward {
  Linear<T> first;
  Linear<T> second;
  bool relu_output = false;

  static FeedForward make(ParameterSet<T>& ps, const std::string& name, std::size_t in, const std::vector<std::size_t>& widths,
                          bool relu_output, std::mt19937_64& rng) {
    if (widths.size() != 2) throw ConfigError(name + ": feed-forward needs two widths");
    return {Linear<T>::make(ps, name + ".0", in, widths[0], rng), Linear<T>::make(ps, name + ".1", widths[0], widths[1], rng),
            relu_output};
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    auto y = second(nx::relu(first(x)));
    return relu_output ? nx::relu(y) : y;
  }
};

template <class T>
nx::BatchNormParams<T> make_batch_norm(ParameterSet<T>& ps, const std::string& name, std::size_t width) {
  nx::BatchNormParams<T> p;
  p.gamma = ps.add_constant(name + ".gamma", {width}, T{1});
  p.beta = ps.add_zeros(name + ".beta", {width});
  p.running_mean = ps.add_zeros(name + ".running_mean", {width}, false);
  p.running_var = ps.add_constant(name + ".running_var", {width}, T{1}, false);
  return p;
}

/// Pre-norm encoder block: x + MHA(BN(x)), then h + conv(ReLU(conv(BN(h)))).
template <class T>
struct TransformerBlock {
  nx::BatchNormParams<T> norm1;
  nx::AttentionParams<T> attention;
  nx::BatchNormParams<T> norm2;
  Linear<T> conv1;
  Linear<T> conv2;
  std::size_t heads = 4;
  std::size_t head_dim = 32;

  static TransformerBlock make(ParameterSet<T>& ps, const std::string& name, const TransformerConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const std::size_t f = cfg.feat_width, w = cfg.heads * cfg.head_dim;
    TransformerBlock b;
    b.heads = cfg.heads;
    b.head_dim = cfg.head_dim;
    b.norm1 = make_batch_norm(ps, name + ".norm1", f);
    auto& a = b.attention;
    a.wq = ps.add_glorot(name + ".attn.wq", f, w, rng);
    a.bq = ps.add_zeros(name + ".attn.bq", {w});
    a.wk = ps.add_glorot(name + ".attn.wk", f, w, rng);
    a.bk = ps.add_zeros(name + ".attn.bk", {w});
    a.wv = ps.add_glorot(name + ".attn.wv", f, w, rng);
    a.bv = ps.add_zeros(name + ".attn.bv", {w});
    a.wo = ps.add_glorot(name + ".attn.wo", w, f, rng);
    a.bo = ps.add_zeros(name + ".attn.bo", {f});
    b.norm2 = make_batch_norm(ps, name + ".norm2", f);
    b.conv1 = Linear<T>::make(ps, name + ".conv1", f, cfg.conv_widths[0], rng);
    b.conv2 = Linear<T>::make(ps, name + ".conv2", cfg.conv_widths[0], cfg.conv_widths[1], rng);
    return b;
  }

  /// x[batch, time, feat] -> same shape.
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) {
    const auto h = nx::add(x, nx::multi_head_attention(nx::batch_norm_features(x, norm1, mode), heads, head_dim, attention));
    const auto inner = nx::relu(nx::conv1d_pointwise(nx::batch_norm_features(h, norm2, mode), conv1.w, conv1.b));
    return nx::add(h, nx::conv1d_pointwise(inner, conv2.w, conv2.b));
  }
};

template <class T>
struct LstmStack {
  std::vector<nx::LstmParams<T>> layers;

  static LstmStack make(ParameterSet<T>& ps, const std::string& name, std::size_t in, const std::vector<std::size_t>& widths,
                        std::mt19937_64& rng) {
    LstmStack s;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const std::size_t h = widths[i];
      const std::string n = name + "." + std::to_string(i);
      nx::LstmParams<T> p;
      p.w_input = ps.add_glorot(n + ".w_input", in, 4 * h, rng);
      p.w_hidden = ps.add_glorot(n + ".w_hidden", h, 4 * h, rng);
      std::vector<T> bias(4 * h, T{0});
      std::fill(bias.begin() + static_cast<std::ptrdiff_t>(h), bias.begin() + static_cast<std::ptrdiff_t>(2 * h), T{1});  // forget gate
      p.bias = ps.add(n + ".bias", {4 * h}, std::move(bias));
      s.layers.push_back(p);
      in = h;
    }
    return s;
  }

  std::size_t output_width() const { return layers.back().w_hidden.dim(0); }

  nx::LstmOutput<T> operator()(const Tensor<T>& x) const {
    nx::LstmOutput<T> out{x, {}, {}};
    for (const auto& p : layers) out = nx::lstm_layer(out.sequence, p);
    return out;
  }
};

/// Graph max aggregation over the station axis: pairs[B, k, W, F] are
/// encoded as B*k independent windows into [B*k, E] and reduced to [B, E]
/// by an elementwise max across the k embeddings.
template <class T, class Encoder>
Tensor<T> aggregate_weather(const Tensor<T>& pairs, Encoder&& encode) {
  if (pairs.rank() != 4) throw DimensionError("aggregate_weather expects [batch, k, time, feat], got " + nx::shape_string(pairs.shape()));
  const std::size_t B = pairs.dim(0), k = pairs.dim(1);
  if (k == 0) throw PreconditionError("aggregate_weather: k must be at least 1");
  const auto embeddings = encode(nx::reshape(pairs, {B * k, pairs.dim(2), pairs.dim(3)}));
  const std::size_t E = embeddings.shape().back();
  return nx::max_axis(nx::reshape(embeddings, {B, k, E}), 1);
}

/// Restricts pairs[B, K, W, F] to the first k stations.
template <class T>
Tensor<T> nearest_pairs(const Tensor<T>& pairs, std::size_t k) {
  if (k == 0 || k > pairs.dim(1))
    throw PreconditionError("k=" + std::to_string(k) + " outside [1, " + std::to_string(pairs.dim(1)) + "]");
  if (k == pairs.dim(1)) return pairs;
  std::vector<Tensor<T>> parts;
  for (std::size_t j = 0; j < k; ++j) parts.push_back(nx::select(pairs, 1, j));
  return nx::stack(parts, 1);
}

}  // namespace gentrap::models
