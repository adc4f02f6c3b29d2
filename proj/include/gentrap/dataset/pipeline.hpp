#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gentrap/dataset/folds.hpp"
#include "gentrap/dataset/preprocess.hpp"
#include "gentrap/dataset/samples.hpp"
#include "gentrap/dataset/tables.hpp"

namespace gentrap::data {

struct PreprocessOptions {
  double drop_threshold = 0.20;
  std::size_t window = 5;
  std::size_t max_k = 3;
  std::size_t n_folds = 5;
  std::size_t derived_k = 3;  // k for the LSTM+ derived statistics
};

struct PreprocessReport {
  std::vector<std::string> dropped_link_features;
  std::vector<std::string> dropped_weather_features;
  std::size_t imputed_link_cells = 0;
  std::size_t imputed_weather_cells = 0;
  std::size_t samples = 0;
  std::size_t failures = 0;
  std::size_t skipped_anchors = 0;
  double class_ratio = 0.0;  // failures / non-failures over all samples
  std::size_t leakage_violations = 0;
};

inline nlohmann::json to_json(const PreprocessReport& r) {
  return {{"dropped_link_features", r.dropped_link_features},
          {"dropped_weather_features", r.dropped_weather_features},
          {"imputed_link_cells", r.imputed_link_cells},
          {"imputed_weather_cells", r.imputed_weather_cells},
          {"samples", r.samples},
          {"failures", r.failures},
          {"skipped_anchors", r.skipped_anchors},
          {"class_ratio", r.class_ratio},
          {"leakage_violations", r.leakage_violations}};
}

struct PreparedData {
  SampleSet samples;
  std::vector<FoldSplit> folds;
  PreprocessReport report;
};

/// load → align → drop → interpolate → merge/label → window → derive → folds.
inline PreparedData run_preprocessing(const RawTables& raw, const PreprocessOptions& opt = {}) {
  PreparedData out;
  auto daily = align_weather_daily(raw.weather_hourly);
  auto [kpis, kpi_drop] = drop_sparse_features(raw.kpis, opt.drop_threshold);
  auto [weather, weather_drop] = drop_sparse_features(std::move(daily), opt.drop_threshold);
  auto [kpis_filled, kpi_imputed] = interpolate_missing(std::move(kpis));
  auto [weather_filled, weather_imputed] = interpolate_missing(std::move(weather));

  BuildReport build;
  out.samples = build_samples(raw, kpis_filled, weather_filled, opt.window, opt.max_k, &build);
  derive_knn_weather_features(out.samples, opt.derived_k);
  out.folds = rolling_origin_folds(out.samples, opt.n_folds);

  auto& r = out.report;
  r.dropped_link_features = kpi_drop.dropped;
  r.dropped_weather_features = weather_drop.dropped;
  r.imputed_link_cells = kpi_imputed;
  r.imputed_weather_cells = weather_imputed;
  r.samples = out.samples.samples.size();
  r.failures = out.samples.failures();
  r.skipped_anchors = build.skipped_gaps;
  r.class_ratio = r.samples > r.failures ? static_cast<double>(r.failures) / static_cast<double>(r.samples - r.failures) : 0.0;
  r.leakage_violations = audit_samples(out.samples, kpis_filled, weather_filled);
  for (const auto& f : out.folds)
    if (!fold_is_time_ordered(out.samples, f)) ++r.leakage_violations;
  return out;
}

}  // namespace gentrap::data
