#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gentrap/dataset/samples.hpp"
#include "gentrap/numerics/tensor.hpp"

namespace gentrap::models {

/// Per-field one-hot vocabulary frozen from a training split. Slot 0 of each
/// field is "unknown" and absorbs values never seen during fitting.
class StaticVocabulary {
 public:
  StaticVocabulary() = default;

  static StaticVocabulary fit(const data::SampleSet& set, std::span<const std::size_t> indices) {
    StaticVocabulary v;
    v.fields_ = set.static_fields;
    v.values_.resize(v.fields_.size());
    for (const auto i : indices) {
      const auto& s = set.samples.at(i);
      for (std::size_t f = 0; f < v.fields_.size() && f < s.static_values.size(); ++f) v.values_[f].push_back(s.static_values[f]);
    }
    for (auto& vals : v.values_) {
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    }
    return v;
  }

  std::size_t width() const {
    std::size_t w = 0;
    for (const auto& vals : values_) w += vals.size() + 1;
    return w;
  }

  /// Writes the multi-hot encoding of `values` into out[0 .. width()).
  template <class T>
  void encode(const std::vector<std::string>& values, T* out) const {
    std::size_t offset = 0;
    for (std::size_t f = 0; f < values_.size(); ++f) {
      std::size_t slot = 0;
      if (f < values.size()) {
        const auto it = std::lower_bound(values_[f].begin(), values_[f].end(), values[f]);
        if (it != values_[f].end() && *it == values[f]) slot = 1 + static_cast<std::size_t>(it - values_[f].begin());
      }
      out[offset + slot] = T{1};
      offset += values_[f].size() + 1;
    }
  }

  const std::vector<std::string>& fields() const { return fields_; }
  const std::vector<std::vector<std::string>>& values() const { return values_; }

  nlohmann::json to_json() const { return {{"fields", fields_}, {"values", values_}}; }
  static StaticVocabulary from_json(const nlohmann::json& j) {
    StaticVocabulary v;
    v.fields_ = j.at("fields").get<std::vector<std::string>>();
    v.values_ = j.at("values").get<std::vector<std::vector<std::string>>>();
    return v;
  }

 private:
  std::vector<std::string> fields_;
  std::vector<std::vector<std::string>> values_;
};

/// Per-feature z-score parameters.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  // rows of width `width` laid out back to back in each vector of `blocks`
  static Standardizer fit(const std::vector<const std::vector<double>*>& blocks, std::size_t width) {
    Standardizer s;
    s.mean.assign(width, 0.0);
    s.scale.assign(width, 1.0);
    std::vector<double> sq(width, 0.0);
    std::size_t n = 0;
    for (const auto* b : blocks) {
      for (std::size_t r = 0; r + width <= b->size(); r += width, ++n)
        for (std::size_t c = 0; c < width; ++c) s.mean[c] += (*b)[r + c];
    }
    if (n == 0) return s;
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (const auto* b : blocks)
      for (std::size_t r = 0; r + width <= b->size(); r += width)
        for (std::size_t c = 0; c < width; ++c) sq[c] += ((*b)[r + c] - s.mean[c]) * ((*b)[r + c] - s.mean[c]);
    for (std::size_t c = 0; c < width; ++c) {
      const double sd = std::sqrt(sq[c] / static_cast<double>(n));
      s.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  double apply(double v, std::size_t c) const { return (v - mean[c]) / scale[c]; }

  nlohmann::json to_json() const { return {{"mean", mean}, {"scale", scale}}; }
  static Standardizer from_json(const nlohmann::json& j) {
    return {j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
  }
};

/// Input dimensions a model is built against.
struct InputDims {
  std::size_t window = 5;
  std::size_t max_k = 3;
  std::size_t link_features = 9;
  std::size_t weather_features = 7;
  std::size_t static_width = 0;
  std::size_t derived_width = 28;

  std::size_t pair_width() const { return link_features + weather_features + 1; }
  std::size_t sequence_width() const { return link_features + derived_width; }
};

/// Train-split statistics that turn samples into model tensors.
struct FeatureEncoder {
  StaticVocabulary vocabulary;
  Standardizer link;
  Standardizer weather;
  Standardizer derived;
  InputDims dims;

  static FeatureEncoder fit(const data::SampleSet& set, std::span<const std::size_t> train) {
    FeatureEncoder e;
    e.vocabulary = StaticVocabulary::fit(set, train);
    std::vector<const std::vector<double>*> link_blocks, weather_blocks, derived_blocks;
    for (const auto i : train) {
      const auto& s = set.samples.at(i);
      link_blocks.push_back(&s.link_window);
      for (const auto& w : s.station_windows) weather_blocks.push_back(&w);
      if (!s.derived.empty()) derived_blocks.push_back(&s.derived);
    }
    const std::size_t wf = set.weather_features.size();
    e.link = Standardizer::fit(link_blocks, set.link_features.size());
    e.weather = Standardizer::fit(weather_blocks, wf);
    e.derived = Standardizer::fit(derived_blocks, 4 * wf);
    e.dims = {set.window, set.max_k, set.link_features.size(), wf, e.vocabulary.width(), 4 * wf};
    return e;
  }

  nlohmann::json to_json() const {
    return {{"vocabulary", vocabulary.to_json()},
            {"link", link.to_json()},
            {"weather", weather.to_json()},
            {"derived", derived.to_json()},
            {"dims",
             {{"window", dims.window},
              {"max_k", dims.max_k},
              {"link_features", dims.link_features},
              {"weather_features", dims.weather_features},
              {"static_width", dims.static_width},
              {"derived_width", dims.derived_width}}}};
  }

  static FeatureEncoder from_json(const nlohmann::json& j) {
    FeatureEncoder e;
    e.vocabulary = StaticVocabulary::from_json(j.at("vocabulary"));
    e.link = Standardizer::from_json(j.at("link"));
    e.weather = Standardizer::from_json(j.at("weather"));
    e.derived = Standardizer::from_json(j.at("derived"));
    const auto& d = j.at("dims");
    e.dims = {d.at("window"), d.at("max_k"), d.at("link_features"), d.at("weather_features"), d.at("static_width"), d.at("derived_width")};
    return e;
  }
};

enum BatchPart : unsigned { kPairs = 1, kSequence = 2, kStatics = 4 };

template <class T>
struct Batch {
  std::size_t size = 0;
  std::size_t k = 0;
  nx::Tensor<T> pairs;     // [B, k, window, link+weather+1], nearest station first, time column last
  nx::Tensor<T> sequence;  // [B, window, link + 4*weather]
  nx::Tensor<T> statics;   // [B, static_width]
  std::vector<int> labels;
};

/// Assembles the requested tensors for `indices`, using the k nearest
/// stations. The time column holds the raw step index 1..window.
template <class T>
Batch<T> make_batch(const data::SampleSet& set, std::span<const std::size_t> indices, std::size_t k, const FeatureEncoder& enc,
                    unsigned parts) {
  const auto& d = enc.dims;
  if (indices.empty()) throw PreconditionError("make_batch: empty batch");
  if (k == 0 || k > d.max_k) throw PreconditionError("make_batch: k=" + std::to_string(k) + " outside [1, " + std::to_string(d.max_k) + "]");
  if (set.link_features.size() != d.link_features || set.weather_features.size() != d.weather_features || set.window != d.window)
    throw DimensionError("make_batch: sample layout does not match the fitted encoder");
  Batch<T> b;
  b.size = indices.size();
  b.k = k;
  const std::size_t B = indices.size(), W = d.window, lf = d.link_features, wf = d.weather_features, pw = d.pair_width();
  if (parts & kPairs) {
    std::vector<T> v(B * k * W * pw);
    T* out = v.data();
    for (const auto i : indices) {
      const auto& s = set.samples.at(i);
      if (s.station_windows.size() < k) throw PreconditionError("make_batch: sample has fewer than k stations");
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t t = 0; t < W; ++t) {
          for (std::size_t c = 0; c < lf; ++c) *out++ = static_cast<T>(enc.link.apply(s.link_window[t * lf + c], c));
          for (std::size_t c = 0; c < wf; ++c) *out++ = static_cast<T>(enc.weather.apply(s.station_windows[j][t * wf + c], c));
          *out++ = static_cast<T>(t + 1);
        }
    }
    b.pairs = nx::Tensor<T>({B, k, W, pw}, std::move(v));
  }
  if (parts & kSequence) {
    const std::size_t sw = d.sequence_width(), dw = d.derived_width;
    std::vector<T> v(B * W * sw);
    T* out = v.data();
    for (const auto i : indices) {
      const auto& s = set.samples.at(i);
      if (s.derived.size() != W * dw) throw PreconditionError("make_batch: derived k-NN weather features missing");
      for (std::size_t t = 0; t < W; ++t) {
        for (std::size_t c = 0; c < lf; ++c) *out++ = static_cast<T>(enc.link.apply(s.link_window[t * lf + c], c));
        for (std::size_t c = 0; c < dw; ++c) *out++ = static_cast<T>(enc.derived.apply(s.derived[t * dw + c], c));
      }
    }
    b.sequence = nx::Tensor<T>({B, W, sw}, std::move(v));
  }
  if (parts & kStatics) {
    const std::size_t sw = d.static_width;
    std::vector<T> v(B * sw, T{0});
    for (std::size_t r = 0; r < B; ++r) enc.vocabulary.encode(set.samples.at(indices[r]).static_values, v.data() + r * sw);
    b.statics = nx::Tensor<T>({B, sw}, std::move(v));
  }
  b.labels.reserve(B);
  for (const auto i : indices) b.labels.push_back(set.samples.at(i).label);
  return b;
}

}  // namespace gentrap::models
