#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <json.hpp>

#include "gentrap/error.hpp"

namespace gentrap::train {

struct Confusion {
  std::size_t tp = 0;  // failures predicted as failures
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct MetricsReport {
  std::string model;
  std::size_t fold = 0;
  Confusion counts;
  ClassMetrics failure;
  ClassMetrics normal;
  ClassMetrics macro;  // unweighted mean of the two classes
};

/// Zero denominators give 0 precision/recall, and F1 is 0 when P + R = 0.
inline ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

inline MetricsReport metrics_from_confusion(const Confusion& c, std::string model = {}, std::size_t fold = 0) {
  MetricsReport r;
  r.model = std::move(model);
  r.fold = fold;
  r.counts = c;
  r.failure = class_metrics(c.tp, c.fp, c.fn);
  r.normal = class_metrics(c.tn, c.fn, c.fp);
  r.macro = {(r.failure.precision + r.normal.precision) / 2.0, (r.failure.recall + r.normal.recall) / 2.0,
             (r.failure.f1 + r.normal.f1) / 2.0};
  return r;
}

inline Confusion confusion_from(std::span<const int> labels, std::span<const int> predicted) {
  if (labels.size() != predicted.size()) throw DimensionError("confusion_from: label/prediction count mismatch");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1)
      (predicted[i] == 1 ? c.tp : c.fn)++;
    else
      (predicted[i] == 1 ? c.fp : c.tn)++;
  }
  return c;
}

inline nlohmann::json to_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  return {{"model", r.model},
          {"fold", r.fold},
          {"tp", r.counts.tp},
          {"tn", r.counts.tn},
          {"fp", r.counts.fp},
          {"fn", r.counts.fn},
          {"failure", to_json(r.failure)},
          {"normal", to_json(r.normal)},
          {"macro", to_json(r.macro)}};
}

}  // namespace gentrap::train
