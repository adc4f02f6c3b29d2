#pragma once

#include <memory>
#include <random>
#include <string>

#include "gentrap/models/features.hpp"
#include "gentrap/models/modules.hpp"

namespace gentrap::models {

/// Column of the logits / softmax that stands for "failure".
inline constexpr std::size_t kFailureColumn = 1;

/// Common interface of the five architectures. Classifiers return logits
/// [B, 2]; autoencoders return the per-sample reconstruction error [B].
template <class T>
class Model {
 public:
  Model(ModelConfig cfg, InputDims dims) : config_(std::move(cfg)), dims_(dims), rng_(config_.init_seed) {
    config_.validate();
    if (config_.gentrap.max_k > dims_.max_k)
      throw ConfigError("model max_k " + std::to_string(config_.gentrap.max_k) + " exceeds the " + std::to_string(dims_.max_k) +
                        " stations stored per sample");
  }
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const std::string& tag() const { return config_.architecture; }
  const ModelConfig& config() const { return config_; }
  const InputDims& dims() const { return dims_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  virtual bool is_autoencoder() const { return false; }
  /// Whether the model consumes a variable number of station pairs.
  virtual bool uses_k() const { return true; }
  virtual unsigned batch_parts() const = 0;
  virtual Tensor<T> forward(const Batch<T>& batch, Mode mode) = 0;

  std::size_t infer_k() const { return uses_k() ? config_.gentrap.infer_k : 1; }
  std::size_t max_k() const { return uses_k() ? config_.gentrap.max_k : 1; }

 protected:
  ModelConfig config_;
  InputDims dims_;
  std::mt19937_64 rng_;
  ParameterSet<T> params_;
};

/// Transformer pair encoder + max aggregation + static branch + head.
template <class T>
class GenTrapModel : public Model<T> {
 public:
  GenTrapModel(ModelConfig cfg, InputDims dims) : Model<T>(std::move(cfg), dims) {
    auto& c = this->config_;
    auto& ps = this->params_;
    if (c.transformer.feat_width != dims.pair_width())
      throw ConfigError("transformer feat_width " + std::to_string(c.transformer.feat_width) + " != pair window width " +
                        std::to_string(dims.pair_width()));
    for (std::size_t i = 0; i < c.transformer.blocks; ++i)
      blocks_.push_back(TransformerBlock<T>::make(ps, "transformer." + std::to_string(i), c.transformer, this->rng_));
    static_ff_ = FeedForward<T>::make(ps, "static_ff", dims.static_width, c.gentrap.static_ff_widths, true, this->rng_);
    head_ = FeedForward<T>::make(ps, "head", dims.pair_width() + c.gentrap.static_ff_widths.back(), c.gentrap.head_ff_widths, false,
                                 this->rng_);
  }

  unsigned batch_parts() const override { return kPairs | kStatics; }

  /// [N, W, F] pair windows -> [N, F] time-pooled encodings.
  Tensor<T> encode_pairs(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = x;
    for (auto& b : blocks_) h = b(h, mode);
    return nx::mean_axis(h, 1);
  }

  Tensor<T> embed(const Batch<T>& batch, Mode mode) {
    return aggregate_weather(batch.pairs, [&](const Tensor<T>& x) { return encode_pairs(x, mode); });
  }

  Tensor<T> forward(const Batch<T>& batch, Mode mode) override {
    return head_(nx::concat_lastdim<T>({embed(batch, mode), static_ff_(batch.statics)}));
  }

  std::vector<TransformerBlock<T>>& blocks() { return blocks_; }

 private:
  std::vector<TransformerBlock<T>> blocks_;
  FeedForward<T> static_ff_;
  FeedForward<T> head_;
};

/// LSTM stack over link KPIs plus k-NN weather statistics.
template <class T>
class LstmPlusModel : public Model<T> {
 public:
  LstmPlusModel(ModelConfig cfg, InputDims dims) : Model<T>(std::move(cfg), dims) {
    auto& c = this->config_;
    auto& ps = this->params_;
    lstm_ = LstmStack<T>::make(ps, "lstm", dims.sequence_width(), c.lstm_widths, this->rng_);
    static_ff_ = FeedForward<T>::make(ps, "static_ff", dims.static_width, c.gentrap.static_ff_widths, true, this->rng_);
    head_ = FeedForward<T>::make(ps, "head", lstm_.output_width() + c.gentrap.static_ff_widths.back(), c.gentrap.head_ff_widths, false,
                                 this->rng_);
  }

  bool uses_k() const override { return false; }
  unsigned batch_parts() const override { return kSequence | kStatics; }

  Tensor<T> forward(const Batch<T>& batch, Mode) override {
    return head_(nx::concat_lastdim<T>({lstm_(batch.sequence).last_hidden, static_ff_(batch.statics)}));
  }

 private:
  LstmStack<T> lstm_;
  FeedForward<T> static_ff_;
  FeedForward<T> head_;
};

/// LSTM pair encoder (last hidden state) + max aggregation.
template <class T>
class GenLstmPlusModel : public Model<T> {
 public:
  GenLstmPlusModel(ModelConfig cfg, InputDims dims) : Model<T>(std::move(cfg), dims) {
    auto& c = this->config_;
    auto& ps = this->params_;
    lstm_ = LstmStack<T>::make(ps, "lstm", dims.pair_width(), c.lstm_widths, this->rng_);
    static_ff_ = FeedForward<T>::make(ps, "static_ff", dims.static_width, c.gentrap.static_ff_widths, true, this->rng_);
    head_ = FeedForward<T>::make(ps, "head", lstm_.output_width() + c.gentrap.static_ff_widths.back(), c.gentrap.head_ff_widths, false,
                                 this->rng_);
  }

  unsigned batch_parts() const override { return kPairs | kStatics; }

  Tensor<T> embed(const Batch<T>& batch, Mode) {
    return aggregate_weather(batch.pairs, [&](const Tensor<T>& x) { return lstm_(x).last_hidden; });
  }

  Tensor<T> forward(const Batch<T>& batch, Mode mode) override {
    return head_(nx::concat_lastdim<T>({embed(batch, mode), static_ff_(batch.statics)}));
  }

 private:
  LstmStack<T> lstm_;
  FeedForward<T> static_ff_;
  FeedForward<T> head_;
};

/// Per-sample mean of squared differences over every axis but the first.
template <class T>
Tensor<T> per_sample_mse(const Tensor<T>& reconstruction, const Tensor<T>& target) {
  const std::size_t B = target.dim(0);
  return nx::mean_axis(nx::reshape(nx::square(nx::sub(reconstruction, target)), {B, target.size() / B}), 1);
}

/// Sequence autoencoder over the nearest-station pair window.
template <class T>
class LstmAutoencoder : public Model<T> {
 public:
  LstmAutoencoder(ModelConfig cfg, InputDims dims) : Model<T>(std::move(cfg), dims) {
    auto& c = this->config_;
    auto& ps = this->params_;
    encoder_ = LstmStack<T>::make(ps, "encoder", dims.pair_width(), c.encoder_widths, this->rng_);
    decoder_ = LstmStack<T>::make(ps, "decoder", encoder_.output_width(), c.decoder_widths, this->rng_);
    output_ = Linear<T>::make(ps, "output", decoder_.output_width(), dims.pair_width(), this->rng_);
  }

  bool is_autoencoder() const override { return true; }
  bool uses_k() const override { return false; }
  unsigned batch_parts() const override { return kPairs; }

  Tensor<T> input(const Batch<T>& batch) const {
    const auto& p = batch.pairs;
    return batch.k == 1 ? nx::reshape(p, {p.dim(0), p.dim(2), p.dim(3)}) : nx::select(p, 1, 0);
  }

  Tensor<T> reconstruct(const Batch<T>& batch) {
    const auto x = input(batch);
    const auto latent = encoder_(x).last_hidden;
    return output_(decoder_(nx::repeat_axis(latent, 1, x.dim(1))).sequence);
  }

  Tensor<T> forward(const Batch<T>& batch, Mode) override { return per_sample_mse(reconstruct(batch), input(batch)); }

 private:
  LstmStack<T> encoder_;
  LstmStack<T> decoder_;
  Linear<T> output_;
};

/// Autoencoder whose latent is the max over k time-pooled pair encodings;
/// the single decoded sequence is compared against every pair.
template <class T>
class GnnLstmAutoencoder : public Model<T> {
 public:
  GnnLstmAutoencoder(ModelConfig cfg, InputDims dims) : Model<T>(std::move(cfg), dims) {
    auto& c = this->config_;
    auto& ps = this->params_;
    encoder_ = LstmStack<T>::make(ps, "encoder", dims.pair_width(), c.encoder_widths, this->rng_);
    decoder_ = LstmStack<T>::make(ps, "decoder", encoder_.output_width(), c.decoder_widths, this->rng_);
    output_ = Linear<T>::make(ps, "output", decoder_.output_width(), dims.pair_width(), this->rng_);
  }

  bool is_autoencoder() const override { return true; }
  unsigned batch_parts() const override { return kPairs; }

  Tensor<T> latent(const Batch<T>& batch) {
    return aggregate_weather(batch.pairs, [&](const Tensor<T>& x) { return nx::mean_axis(encoder_(x).sequence, 1); });
  }

  /// [B, k, W, F]: one reconstruction per pair (identical across pairs).
  Tensor<T> reconstruct(const Batch<T>& batch) {
    const std::size_t W = batch.pairs.dim(2);
    const auto decoded = output_(decoder_(nx::repeat_axis(latent(batch), 1, W)).sequence);
    return nx::repeat_axis(decoded, 1, batch.pairs.dim(1));
  }

  Tensor<T> forward(const Batch<T>& batch, Mode) override { return per_sample_mse(reconstruct(batch), batch.pairs); }

 private:
  LstmStack<T> encoder_;
  LstmStack<T> decoder_;
  Linear<T> output_;
};

template <class T>
std::unique_ptr<Model<T>> make_model(const ModelConfig& cfg, const InputDims& dims) {
  cfg.validate();
  if (cfg.architecture == "gentrap") return std::make_unique<GenTrapModel<T>>(cfg, dims);
  if (cfg.architecture == "gen_lstmplus") return std::make_unique<GenLstmPlusModel<T>>(cfg, dims);
  if (cfg.architecture == "lstmplus") return std::make_unique<LstmPlusModel<T>>(cfg, dims);
  if (cfg.architecture == "gnn_lstmae") return std::make_unique<GnnLstmAutoencoder<T>>(cfg, dims);
  return std::make_unique<LstmAutoencoder<T>>(cfg, dims);
}

}  // namespace gentrap::models
