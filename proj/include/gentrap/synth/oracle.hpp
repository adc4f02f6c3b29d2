#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gentrap/dataset/samples.hpp"
#include "gentrap/synth/generator.hpp"
#include "gentrap/training/metrics.hpp"

namespace gentrap::synth {

/// Scores the clairvoyant predictor (true causal station and rule) on the
/// given samples. This is the ceiling any learned model can reach.
inline train::MetricsReport oracle_best_possible(const GroundTruth& truth, const data::SampleSet& set,
                                                 std::span<const std::size_t> indices, std::size_t fold = 0) {
  std::vector<int> labels, predicted;
  labels.reserve(indices.size());
  predicted.reserve(indices.size());
  for (const auto i : indices) {
    const auto& s = set.samples.at(i);
    const auto it = truth.trigger.find({s.link, s.anchor + 1});
    if (it == truth.trigger.end()) throw DataError("oracle: no trigger recorded for " + s.link.str() + " on " + (s.anchor + 1).str());
    labels.push_back(s.label);
    predicted.push_back(truth.clairvoyant_prediction(it->second) ? 1 : 0);
  }
  return train::metrics_from_confusion(train::confusion_from(labels, predicted), "oracle", fold);
}

inline train::MetricsReport oracle_best_possible(const GroundTruth& truth, const data::SampleSet& set, std::size_t fold = 0) {
  std::vector<std::size_t> all(set.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return oracle_best_possible(truth, set, all, fold);
}

}  // namespace gentrap::synth
