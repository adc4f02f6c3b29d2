#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gentrap/dataset/folds.hpp"
#include "gentrap/models/architectures.hpp"
#include "gentrap/numerics/adam.hpp"
#include "gentrap/training/loss.hpp"
#include "gentrap/training/metrics.hpp"

namespace gentrap::train {

struct TrainConfig {
  std::size_t batch_size = 1024;
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  std::size_t patience = 10;  // epochs without validation macro-F1 gain before stopping
  std::optional<double> lambda;  // overrides the training-split class ratio
  std::size_t eval_batch_size = 4096;
  double majority_fraction = 1.0;  // share of non-failure samples drawn afresh each epoch (classifiers)

  void validate() const {
    if (batch_size == 0 || epochs == 0 || eval_batch_size == 0) throw ConfigError("batch_size, epochs and eval_batch_size must be positive");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (lambda && !(*lambda > 0 && *lambda < 1)) throw ConfigError("lambda must lie in (0, 1)");
    if (!(majority_fraction > 0 && majority_fraction <= 1)) throw ConfigError("majority_fraction must lie in (0, 1]");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size}, {"epochs", c.epochs},     {"learning_rate", c.learning_rate},
       {"seed", c.seed},             {"patience", c.patience}, {"eval_batch_size", c.eval_batch_size},
       {"majority_fraction", c.majority_fraction}};
  if (c.lambda) j["lambda"] = *c.lambda;
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.patience = j.value("patience", c.patience);
  c.eval_batch_size = j.value("eval_batch_size", c.eval_batch_size);
  c.majority_fraction = j.value("majority_fraction", c.majority_fraction);
  if (j.contains("lambda") && !j.at("lambda").is_null()) c.lambda = j.at("lambda").get<double>();
}

/// Uniform draw of the station count per minibatch during training.
class KPolicy {
 public:
  explicit KPolicy(std::size_t max_k) : dist_(1, max_k) {
    if (max_k == 0) throw ConfigError("k policy needs max_k >= 1");
  }
  std::size_t draw(std::mt19937_64& rng) { return dist_(rng); }

 private:
  std::uniform_int_distribution<std::size_t> dist_;
};

struct EpochTrace {
  std::size_t epoch = 0;
  double loss = 0;
  ClassMetrics validation;  // macro averages
  double seconds = 0;
};

struct AEThreshold {
  double threshold = 0;
  double validation_macro_f1 = 0;
};

struct TrainResult {
  std::vector<EpochTrace> trace;
  std::size_t best_epoch = 0;
  double best_validation_f1 = -1;
  double lambda = 0;
  std::optional<AEThreshold> threshold;  // autoencoders only
  std::vector<std::size_t> k_draws;      // per minibatch, in order
};

inline std::string trace_csv(const TrainResult& r) {
  std::ostringstream os;
  os << "epoch,loss,val_precision,val_recall,val_f1,seconds\n";
  for (const auto& e : r.trace)
    os << e.epoch << ',' << e.loss << ',' << e.validation.precision << ',' << e.validation.recall << ',' << e.validation.f1 << ','
       << e.seconds << '\n';
  return os.str();
}

/// Failure probability (classifiers) or reconstruction error (autoencoders)
/// per sample, computed in inference mode with the model's inference k.
template <class T>
std::vector<double> score(models::Model<T>& model, const data::SampleSet& set, std::span<const std::size_t> indices,
                          const models::FeatureEncoder& enc, std::size_t batch_size = 4096) {
  if (indices.empty()) throw PreconditionError("score: empty sample set");
  nx::NoGradGuard no_grad;
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const auto part = indices.subspan(start, std::min(batch_size, indices.size() - start));
    const auto batch = models::make_batch<T>(set, part, model.infer_k(), enc, model.batch_parts());
    const auto y = model.forward(batch, nx::Mode::infer);
    const auto s = model.is_autoencoder() ? y : failure_probability(y);
    for (const auto e : s.values()) out.push_back(static_cast<double>(e));
  }
  return out;
}

inline std::vector<int> labels_of(const data::SampleSet& set, std::span<const std::size_t> indices) {
  std::vector<int> y;
  y.reserve(indices.size());
  for (const auto i : indices) y.push_back(set.samples.at(i).label);
  return y;
}

/// Classifier decision: the larger of the two softmax scores, ties to normal.
inline std::vector<int> predict_from_probability(std::span<const double> p) {
  std::vector<int> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > 0.5 ? 1 : 0;
  return out;
}

inline std::vector<int> predict_from_error(std::span<const double> errors, double threshold) {
  std::vector<int> out(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) out[i] = errors[i] > threshold ? 1 : 0;
  return out;
}

/// Threshold maximizing macro-F1 over 1001 quantiles of the validation
/// errors; failure when error > threshold. Ties keep the lowest threshold.
inline AEThreshold choose_threshold(std::span<const double> errors, std::span<const int> labels) {
  if (errors.size() != labels.size() || errors.empty()) throw PreconditionError("choose_threshold: need matching nonempty errors and labels");
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg) throw DataError("choose_threshold: validation set must contain both classes");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  AEThreshold best{sorted.front(), -1};
  const std::size_t n = sorted.size();
  for (std::size_t q = 0; q <= 1000; ++q) {
    const double t = sorted[std::min(n - 1, (q * (n - 1) + 500) / 1000)];
    const auto m = metrics_from_confusion(confusion_from(labels, predict_from_error(errors, t)));
    if (m.macro.f1 > best.validation_macro_f1) best = {t, m.macro.f1};
  }
  return best;
}

template <class T>
MetricsReport evaluate(models::Model<T>& model, const data::SampleSet& set, std::span<const std::size_t> indices,
                       const models::FeatureEncoder& enc, std::optional<double> threshold = std::nullopt, std::size_t fold = 0,
                       std::size_t batch_size = 4096) {
  if (indices.empty()) throw PreconditionError("evaluate: empty sample set");
  const auto s = score(model, set, indices, enc, batch_size);
  const auto y = labels_of(set, indices);
  std::vector<int> pred;
  if (model.is_autoencoder()) {
    if (!threshold) throw PreconditionError("evaluate: autoencoder needs a threshold");
    pred = predict_from_error(s, *threshold);
  } else {
    pred = predict_from_probability(s);
  }
  return metrics_from_confusion(confusion_from(y, pred), model.tag(), fold);
}

/// Minibatch training with Adam, per-minibatch random k, best-validation
/// snapshot and early stopping. Autoencoders train on normal samples only
/// and get a validation-chosen threshold.
template <class T>
TrainResult train(models::Model<T>& model, const data::SampleSet& set, const data::FoldSplit& fold, const models::FeatureEncoder& enc,
                  const TrainConfig& cfg, const std::function<void(const EpochTrace&)>& on_epoch = {}) {
  cfg.validate();
  TrainResult result;
  std::vector<std::size_t> minority, majority;
  for (const auto i : fold.train) (set.samples.at(i).label == 1 ? minority : majority).push_back(i);
  if (model.is_autoencoder()) minority.clear();
  const std::size_t majority_draw =
      model.is_autoencoder() ? majority.size()
                             : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.majority_fraction * static_cast<double>(majority.size()))));
  if (majority.empty() || fold.validation.empty()) throw PreconditionError("train: empty training or validation split");
  const std::size_t epoch_size = minority.size() + majority_draw;
  if (!model.is_autoencoder()) {
    if (minority.empty()) throw ConfigError("training split has no failure events; cannot set the loss weight");
    const double share = static_cast<double>(minority.size()) / static_cast<double>(epoch_size);
    result.lambda = cfg.lambda ? *cfg.lambda : static_cast<double>(minority.size()) / static_cast<double>(majority_draw);
    if (!(result.lambda > 0 && result.lambda < 1)) throw ConfigError("training split has no majority non-failure class; cannot set the loss weight");
    if (cfg.batch_size < epoch_size && static_cast<double>(cfg.batch_size) * share < 2.0)
      throw ConfigError("batch_size " + std::to_string(cfg.batch_size) + " gives fewer than 2 expected failures per batch (failure share " +
                        std::to_string(share) + ")");
  }
  std::vector<std::size_t> train_idx(epoch_size);

  std::mt19937_64 rng(cfg.seed);
  KPolicy k_policy(model.max_k());
  nx::AdamState<T> adam{{cfg.learning_rate, 0.9, 0.999, 1e-8}};
  auto& params = model.parameters();
  auto best = params.snapshot();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (majority_draw < majority.size()) std::shuffle(majority.begin(), majority.end(), rng);
    std::copy(minority.begin(), minority.end(), train_idx.begin());
    std::copy_n(majority.begin(), majority_draw, train_idx.begin() + static_cast<std::ptrdiff_t>(minority.size()));
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::span<const std::size_t> part(train_idx.data() + start, std::min(cfg.batch_size, train_idx.size() - start));
      const std::size_t k = k_policy.draw(rng);
      result.k_draws.push_back(k);
      const auto batch = models::make_batch<T>(set, part, k, enc, model.batch_parts());
      const auto out = model.forward(batch, nx::Mode::train);
      const auto loss = model.is_autoencoder() ? nx::mean_all(out) : weighted_cross_entropy(batch.labels, failure_probability(out), result.lambda);
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << "training diverged: non-finite loss at epoch " << epoch << ", batch starting at " << start << " (k=" << k << ")";
        if (!result.trace.empty()) os << "; last epoch loss " << result.trace.back().loss;
        throw TrainingDivergence(os.str());
      }
      loss.backward();
      nx::adam_step(params, adam);
      loss_sum += value * static_cast<double>(part.size());
      loss_count += part.size();
    }

    EpochTrace e;
    e.epoch = epoch;
    e.loss = loss_sum / static_cast<double>(loss_count);
    std::optional<AEThreshold> threshold;
    if (model.is_autoencoder()) {
      const auto errors = score(model, set, fold.validation, enc, cfg.eval_batch_size);
      threshold = choose_threshold(errors, labels_of(set, fold.validation));
      e.validation = metrics_from_confusion(confusion_from(labels_of(set, fold.validation), predict_from_error(errors, threshold->threshold))).macro;
    } else {
      e.validation = evaluate(model, set, fold.validation, enc, std::nullopt, fold.fold_index, cfg.eval_batch_size).macro;
    }
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.push_back(e);
    if (on_epoch) on_epoch(e);
    if (e.validation.f1 > result.best_validation_f1) {
      result.best_validation_f1 = e.validation.f1;
      result.best_epoch = epoch;
      result.threshold = threshold;
      best = params.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  params.restore(best);
  return result;
}

/// Autoencoder training on normal links followed by threshold selection.
template <class T>
std::pair<TrainResult, AEThreshold> fit_ae_and_threshold(models::Model<T>& model, const data::SampleSet& set, const data::FoldSplit& fold,
                                                         const models::FeatureEncoder& enc, const TrainConfig& cfg) {
  if (!model.is_autoencoder()) throw PreconditionError("fit_ae_and_threshold: model " + model.tag() + " is not an autoencoder");
  auto result = train(model, set, fold, enc, cfg);
  const auto errors = score(model, set, fold.validation, enc, cfg.eval_batch_size);
  const auto threshold = choose_threshold(errors, labels_of(set, fold.validation));
  result.threshold = threshold;
  return {std::move(result), threshold};
}

}  // namespace gentrap::train
