#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gentrap/dataset/tables.hpp"

namespace gentrap::data {

/// Per (station, calendar day) arithmetic mean of each feature's non-missing
/// hourly values; a day with no valid hour for a feature stays missing.
inline WeatherDayTable align_weather_daily(const WeatherHourlyTable& hourly) {
  const std::size_t nf = hourly.feature_names.size();
  struct Acc {
    std::vector<double> sum;
    std::vector<std::size_t> count;
  };
  std::map<std::pair<std::string, Date>, Acc> groups;
  for (const auto& r : hourly.rows) {
    auto& acc = groups[{r.station_id, r.date}];
    if (acc.sum.empty()) {
      acc.sum.assign(nf, 0.0);
      acc.count.assign(nf, 0);
    }
    for (std::size_t f = 0; f < nf; ++f)
      if (!is_missing(r.observations[f])) {
        acc.sum[f] += r.observations[f];
        ++acc.count[f];
      }
  }
  WeatherDayTable out{hourly.feature_names, {}};
  out.rows.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    WeatherDayRecord rec{key.first, key.second, std::vector<double>(nf, kMissing)};
    for (std::size_t f = 0; f < nf; ++f)
      if (acc.count[f] > 0) rec.observations[f] = acc.sum[f] / static_cast<double>(acc.count[f]);
    out.rows.push_back(std::move(rec));
  }
  return out;
}

struct DropReport {
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  std::vector<double> missing_fraction;  // per original feature
};

namespace detail {

template <class Row>
DropReport drop_columns(std::vector<std::string>& names, std::vector<Row>& rows, std::vector<double> Row::*values,
                        double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("drop threshold must be in (0, 1]");
  DropReport report;
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < names.size(); ++f) {
    std::size_t missing = 0;
    for (const auto& r : rows) missing += is_missing((r.*values)[f]) ? 1 : 0;
    const double frac = rows.empty() ? 0.0 : static_cast<double>(missing) / static_cast<double>(rows.size());
    report.missing_fraction.push_back(frac);
    if (frac >= threshold) {
      report.dropped.push_back(names[f]);
    } else {
      report.kept.push_back(names[f]);
      keep.push_back(f);
    }
  }
  names = report.kept;
  for (auto& r : rows) {
    std::vector<double> reduced;
    reduced.reserve(keep.size());
    for (auto f : keep) reduced.push_back((r.*values)[f]);
    r.*values = std::move(reduced);
  }
  return report;
}

}  // namespace detail

/// Removes every numeric feature whose missing fraction is >= threshold
/// (boundary inclusive).
inline std::pair<LinkDayTable, DropReport> drop_sparse_features(LinkDayTable table, double threshold = 0.20) {
  auto report = detail::drop_columns(table.kpi_names, table.rows, &LinkDayRecord::kpis, threshold);
  return {std::move(table), std::move(report)};
}

inline std::pair<WeatherDayTable, DropReport> drop_sparse_features(WeatherDayTable table, double threshold = 0.20) {
  auto report = detail::drop_columns(table.feature_names, table.rows, &WeatherDayRecord::observations, threshold);
  return {std::move(table), std::move(report)};
}

/// Fills one date-ordered series in place: interior gaps by linear
/// interpolation in date units, leading/trailing gaps by nearest value.
/// Returns the number of filled cells.
inline std::size_t interpolate_series(std::span<const Date> dates, std::span<double> values) {
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!is_missing(values[i])) known.push_back(i);
  if (known.empty()) {
    if (values.empty()) return 0;
    throw DataError("interpolate_missing: series has no observed values");
  }
  std::size_t filled = 0;
  for (std::size_t i = 0; i < known.front(); ++i, ++filled) values[i] = values[known.front()];
  for (std::size_t i = known.back() + 1; i < values.size(); ++i, ++filled) values[i] = values[known.back()];
  for (std::size_t j = 0; j + 1 < known.size(); ++j) {
    const std::size_t a = known[j], b = known[j + 1];
    const double span = static_cast<double>(dates[b] - dates[a]);
    for (std::size_t i = a + 1; i < b; ++i, ++filled) {
      const double w = static_cast<double>(dates[i] - dates[a]) / span;
      values[i] = values[a] + w * (values[b] - values[a]);
    }
  }
  return filled;
}

namespace detail {

template <class Row, class KeyFn>
std::size_t interpolate_rows(std::vector<Row>& rows, std::size_t n_features, std::vector<double> Row::*values, KeyFn key_of,
                             const char* table) {
  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    const auto ka = key_of(a), kb = key_of(b);
    return ka != kb ? ka < kb : a.date < b.date;
  });
  std::size_t filled = 0;
  std::size_t begin = 0;
  while (begin < rows.size()) {
    std::size_t end = begin + 1;
    while (end < rows.size() && key_of(rows[end]) == key_of(rows[begin])) ++end;
    std::vector<Date> dates;
    for (std::size_t i = begin; i < end; ++i) dates.push_back(rows[i].date);
    std::vector<double> series(end - begin);
    for (std::size_t f = 0; f < n_features; ++f) {
      for (std::size_t i = begin; i < end; ++i) series[i - begin] = (rows[i].*values)[f];
      try {
        filled += interpolate_series(dates, series);
      } catch (const DataError&) {
        throw DataError(std::string("interpolate_missing: ") + table + " series for a single entity is entirely missing");
      }
      for (std::size_t i = begin; i < end; ++i) (rows[i].*values)[f] = series[i - begin];
    }
    begin = end;
  }
  return filled;
}

}  // namespace detail

/// Imputes every (entity, feature) series; rows come back sorted by entity
/// then date. Returns the filled table and the number of imputed cells.
inline std::pair<LinkDayTable, std::size_t> interpolate_missing(LinkDayTable table) {
  const auto n = detail::interpolate_rows(table.rows, table.kpi_names.size(), &LinkDayRecord::kpis,
                                          [](const LinkDayRecord& r) -> const LinkKey& { return r.link; }, "rl-kpis");
  return {std::move(table), n};
}

inline std::pair<WeatherDayTable, std::size_t> interpolate_missing(WeatherDayTable table) {
  const auto n =
      detail::interpolate_rows(table.rows, table.feature_names.size(), &WeatherDayRecord::observations,
                               [](const WeatherDayRecord& r) -> const std::string& { return r.station_id; }, "met-real");
  return {std::move(table), n};
}

}  // namespace gentrap::data
