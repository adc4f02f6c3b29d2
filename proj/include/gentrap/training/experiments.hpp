#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gentrap/dataset/folds.hpp"
#include "gentrap/models/architectures.hpp"
#include "gentrap/training/trainer.hpp"

namespace gentrap::train {

/// Outcome of training one architecture on one split and scoring its test set.
struct JobResult {
  std::string model;
  std::size_t fold = 0;
  MetricsReport test;
  TrainResult training;
};

/// Fits the encoder on `fold.train`, trains a fresh float model and
/// evaluates it on `fold.test` (autoencoders at their validation threshold).
inline JobResult run_job(const std::string& architecture, const data::SampleSet& set, const data::FoldSplit& fold,
                         models::ModelConfig model_cfg, const TrainConfig& train_cfg,
                         const std::function<void(const EpochTrace&)>& on_epoch = {}) {
  model_cfg.architecture = architecture;
  const auto enc = models::FeatureEncoder::fit(set, fold.train);
  auto model = models::make_model<float>(model_cfg, enc.dims);
  JobResult r;
  r.model = architecture;
  r.fold = fold.fold_index;
  r.training = train(*model, set, fold, enc, train_cfg, on_epoch);
  std::optional<double> threshold;
  if (r.training.threshold) threshold = r.training.threshold->threshold;
  r.test = evaluate(*model, set, fold.test, enc, threshold, fold.fold_index, train_cfg.eval_batch_size);
  r.test.model = architecture;
  return r;
}

/// Runs `count` independent jobs on up to `jobs` threads; results keep their index.
template <class Fn>
std::vector<JobResult> run_parallel(std::size_t count, std::size_t jobs, Fn&& job) {
  std::vector<JobResult> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        out[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, count));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline Confusion add(Confusion a, const Confusion& b) {
  a.tp += b.tp;
  a.tn += b.tn;
  a.fp += b.fp;
  a.fn += b.fn;
  return a;
}

// ---------------------------------------------------------------------------
// Comparison across folds

struct ComparisonReport {
  std::vector<std::string> models;
  std::vector<std::size_t> folds;
  std::vector<JobResult> cells;  // model-major, folds in order

  const JobResult& at(const std::string& model, std::size_t fold) const {
    for (const auto& c : cells)
      if (c.model == model && c.fold == fold) return c;
    throw PreconditionError("comparison report has no cell for " + model + " fold " + std::to_string(fold));
  }

  /// Metrics over the summed confusion counts of every fold's test set.
  MetricsReport pooled(const std::string& model) const {
    Confusion total;
    for (const auto& c : cells)
      if (c.model == model) total = add(total, c.test.counts);
    return metrics_from_confusion(total, model, 0);
  }
};

/// Trains and evaluates every architecture on every given fold.
inline ComparisonReport run_comparison(const std::vector<std::string>& architectures, const data::SampleSet& set,
                                       const std::vector<data::FoldSplit>& folds, const models::ModelConfig& model_cfg,
                                       const TrainConfig& train_cfg, std::size_t jobs = 1) {
  if (architectures.empty() || folds.empty()) throw ConfigError("run_comparison: need at least one architecture and one fold");
  ComparisonReport report;
  report.models = architectures;
  for (const auto& f : folds) report.folds.push_back(f.fold_index);
  report.cells = run_parallel(architectures.size() * folds.size(), jobs, [&](std::size_t i) {
    return run_job(architectures[i / folds.size()], set, folds[i % folds.size()], model_cfg, train_cfg);
  });
  return report;
}

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : r.cells)
    rows.push_back({{"model", c.model},
                    {"fold", c.fold},
                    {"test", to_json(c.test)},
                    {"best_epoch", c.training.best_epoch},
                    {"best_validation_f1", c.training.best_validation_f1}});
  nlohmann::json pooled = nlohmann::json::object();
  for (const auto& m : r.models) pooled[m] = to_json(r.pooled(m));
  return {{"models", r.models}, {"folds", r.folds}, {"cells", rows}, {"pooled", pooled}};
}

namespace detail {
inline std::string fmt(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  s.resize(std::max(width, s.size()), ' ');
  return s;
}

inline std::string prf(const ClassMetrics& m) { return "| " + fmt(m.precision) + " " + fmt(m.recall) + " " + fmt(m.f1) + " "; }

inline std::string group(const std::string& title) { return pad("| " + title + " P/R/F1", 23); }
}  // namespace detail

/// Rows = models; per fold the macro P, R, F1; last group pools all folds.
inline std::string render_table(const ComparisonReport& r) {
  std::ostringstream os;
  os << detail::pad("model", 13);
  for (const auto f : r.folds) os << detail::group("fold " + std::to_string(f));
  os << detail::group("pooled") << "\n";
  for (const auto& m : r.models) {
    os << detail::pad(m, 13);
    for (const auto f : r.folds) os << detail::prf(r.at(m, f).test.macro);
    os << detail::prf(r.pooled(m).macro) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Generalization to unseen links

/// Seed-stable link order; the first round(f * L) links form the fraction-f
/// training topology, so smaller fractions are subsets of larger ones.
inline std::vector<data::LinkKey> link_order(const data::SampleSet& set, std::uint64_t seed) {
  std::set<data::LinkKey> unique;
  for (const auto& s : set.samples) unique.insert(s.link);
  std::vector<data::LinkKey> links(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  std::shuffle(links.begin(), links.end(), rng);
  return links;
}

inline std::set<data::LinkKey> link_fraction(const std::vector<data::LinkKey>& order, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw ConfigError("link fraction must lie in (0, 1], got " + std::to_string(fraction));
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size()))));
  return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n, order.size()))};
}

/// The fold with its training split restricted to `links`; validation and
/// test keep the full topology.
inline data::FoldSplit restrict_training(const data::SampleSet& set, const data::FoldSplit& fold, const std::set<data::LinkKey>& links,
                                         double fraction) {
  data::FoldSplit out = fold;
  out.train.clear();
  std::size_t failures = 0;
  for (const auto i : fold.train)
    if (links.count(set.samples[i].link)) {
      out.train.push_back(i);
      failures += set.samples[i].label == 1 ? 1 : 0;
    }
  if (failures == 0)
    throw ConfigError("link fraction " + std::to_string(fraction) + " leaves no failure events in fold " + std::to_string(fold.fold_index) +
                      " training data");
  return out;
}

struct GeneralizationReport {
  std::vector<std::string> models;
  std::vector<double> fractions;
  std::size_t fold = 0;
  std::vector<JobResult> cells;  // fraction-major, models in order

  const JobResult& at(double fraction, const std::string& model) const {
    for (std::size_t i = 0; i < fractions.size(); ++i)
      if (fractions[i] == fraction)
        for (std::size_t m = 0; m < models.size(); ++m)
          if (models[m] == model) return cells[i * models.size() + m];
    throw PreconditionError("generalization report has no cell for " + model + " at fraction " + std::to_string(fraction));
  }
};

inline const std::vector<double> kDefaultFractions{0.5, 0.4, 0.3, 0.2, 0.1};

/// Trains each architecture on nested link fractions of one fold and tests on
/// the fold's full test split (unseen links included).
inline GeneralizationReport run_generalization(const std::vector<std::string>& architectures, const data::SampleSet& set,
                                               const data::FoldSplit& fold, const std::vector<double>& fractions,
                                               const models::ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                               std::uint64_t link_seed, std::size_t jobs = 1) {
  if (architectures.empty() || fractions.empty()) throw ConfigError("run_generalization: need architectures and fractions");
  const auto order = link_order(set, link_seed);
  std::vector<data::FoldSplit> splits;
  for (const double f : fractions) splits.push_back(restrict_training(set, fold, link_fraction(order, f), f));
  GeneralizationReport report{architectures, fractions, fold.fold_index, {}};
  report.cells = run_parallel(fractions.size() * architectures.size(), jobs, [&](std::size_t i) {
    return run_job(architectures[i % architectures.size()], set, splits[i / architectures.size()], model_cfg, train_cfg);
  });
  return report;
}

inline nlohmann::json to_json(const GeneralizationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.fractions.size(); ++i)
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      const auto& c = r.cells[i * r.models.size() + m];
      rows.push_back({{"fraction", r.fractions[i]}, {"model", c.model}, {"test", to_json(c.test)}});
    }
  return {{"models", r.models}, {"fractions", r.fractions}, {"fold", r.fold}, {"cells", rows}};
}

/// Rows = fractions; per model the macro P, R, F1 on the full test split.
inline std::string render_table(const GeneralizationReport& r) {
  std::ostringstream os;
  os << detail::pad("fraction", 9);
  for (const auto& m : r.models) os << detail::group(m);
  os << "\n";
  for (const double f : r.fractions) {
    os << detail::pad(detail::fmt(f), 9);
    for (const auto& m : r.models) os << detail::prf(r.at(f, m).test.macro);
    os << "\n";
  }
  return os.str();
}

}  // namespace gentrap::train
