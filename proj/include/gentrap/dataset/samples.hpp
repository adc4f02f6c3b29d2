#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gentrap/dataset/tables.hpp"

namespace gentrap::data {

/// One (link, anchor day) example: the trailing window of link KPIs, the
/// time-aligned windows of the nearest stations, static categories, and the
/// status of the following day.
struct Sample {
  LinkKey link;
  Date anchor;
  std::vector<double> link_window;                   // [window, link_features], row-major
  std::vector<std::vector<double>> station_windows;  // max_k × [window, weather_features], nearest first
  std::vector<std::string> station_ids;
  std::vector<double> station_distances;
  std::vector<std::string> static_values;  // aligned with SampleSet::static_fields
  std::vector<double> derived;             // [window, 4*weather_features] once derived; else empty
  int label = 0;                           // 1 = failure on anchor + 1
};

struct SampleSet {
  std::size_t window = 5;
  std::size_t max_k = 3;
  std::vector<std::string> link_features;
  std::vector<std::string> weather_features;
  std::vector<std::string> static_fields;
  std::size_t derived_k = 0;  // 0 until derive_knn_weather_features ran
  std::vector<Sample> samples;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.label == 1; }));
  }
};

inline const std::vector<std::string> kStaticFields{"site_clutter", "card_type", "modulation",
                                                    "freq_band",    "station_clutter", "weather_day"};

struct BuildReport {
  std::size_t emitted = 0;
  std::size_t skipped_gaps = 0;  // anchors whose window or label day is missing somewhere
};

namespace detail {

template <class Row>
std::map<Date, const Row*> by_date(const std::vector<const Row*>& rows, const std::string& who) {
  std::map<Date, const Row*> out;
  for (const auto* r : rows)
    if (!out.emplace(r->date, r).second) throw DataError("duplicate day " + r->date.str() + " for " + who);
  return out;
}

}  // namespace detail

/// Builds one sample per (link, anchor) with a complete `window`-day history
/// for the link and its `max_k` nearest stations, plus a next-day status.
/// Output is ordered by (anchor, link key). A time-step column is not stored
/// here; models append it when assembling pair windows.
inline SampleSet build_samples(const RawTables& meta, const LinkDayTable& kpis, const WeatherDayTable& weather,
                               std::size_t window, std::size_t max_k, BuildReport* report = nullptr) {
  if (window == 0 || max_k == 0) throw ConfigError("build_samples: window and max_k must be positive");
  SampleSet set;
  set.window = window;
  set.max_k = max_k;
  set.link_features = kpis.kpi_names;
  set.weather_features = weather.feature_names;
  set.static_fields = kStaticFields;
  const std::size_t lf = kpis.kpi_names.size(), wf = weather.feature_names.size();

  std::map<std::string, std::string> site_clutter, station_clutter;
  for (const auto& s : meta.sites) site_clutter[s.site_id] = s.clutter_class;
  for (const auto& s : meta.stations) station_clutter[s.station_id] = s.clutter_class;
  std::map<std::pair<std::string, Date>, std::string> forecast;
  for (const auto& f : meta.forecast) forecast[{f.station_id, f.date}] = f.weather_day;

  std::map<std::string, std::vector<const WeatherDayRecord*>> station_rows;
  for (const auto& r : weather.rows) station_rows[r.station_id].push_back(&r);
  std::map<std::string, std::map<Date, const WeatherDayRecord*>> station_days;
  for (const auto& [id, rows] : station_rows) station_days[id] = detail::by_date(rows, "station " + id);

  std::map<LinkKey, std::vector<const LinkDayRecord*>> link_rows;
  for (const auto& r : kpis.rows) link_rows[r.link].push_back(&r);

  BuildReport local;
  for (const auto& [key, rows] : link_rows) {
    const auto days = detail::by_date(rows, "link " + key.str());
    const auto nearest = meta.distances.nearest(key.site_id, max_k);
    if (nearest.size() < max_k)
      throw ConfigError("site " + key.site_id + " has " + std::to_string(nearest.size()) + " stations in the distance table, need " +
                        std::to_string(max_k));
    std::vector<const std::map<Date, const WeatherDayRecord*>*> st;
    for (const auto& [sid, d] : nearest) {
      const auto it = station_days.find(sid);
      st.push_back(it == station_days.end() ? nullptr : &it->second);
    }
    const auto first_day = days.begin()->first;
    for (const auto& [anchor, rec] : days) {
      if (anchor - first_day < static_cast<std::int32_t>(window) - 1) continue;  // not enough history yet
      const auto label_it = days.find(anchor + 1);
      if (label_it == days.end()) {
        if (anchor != days.rbegin()->first) ++local.skipped_gaps;
        continue;
      }
      Sample s;
      s.link = key;
      s.anchor = anchor;
      s.label = label_it->second->failed ? 1 : 0;
      bool complete = true;
      s.link_window.reserve(window * lf);
      for (std::size_t t = 0; t < window && complete; ++t) {
        const auto it = days.find(anchor - static_cast<std::int32_t>(window - 1 - t));
        if (it == days.end()) {
          complete = false;
          break;
        }
        s.link_window.insert(s.link_window.end(), it->second->kpis.begin(), it->second->kpis.end());
      }
      for (std::size_t j = 0; j < max_k && complete; ++j) {
        if (!st[j]) {
          complete = false;
          break;
        }
        std::vector<double> w;
        w.reserve(window * wf);
        for (std::size_t t = 0; t < window; ++t) {
          const auto it = st[j]->find(anchor - static_cast<std::int32_t>(window - 1 - t));
          if (it == st[j]->end()) {
            complete = false;
            break;
          }
          w.insert(w.end(), it->second->observations.begin(), it->second->observations.end());
        }
        s.station_windows.push_back(std::move(w));
        s.station_ids.push_back(nearest[j].first);
        s.station_distances.push_back(nearest[j].second);
      }
      if (!complete) {
        ++local.skipped_gaps;
        continue;
      }
      const auto& nearest_id = nearest.front().first;
      const auto fc = forecast.find({nearest_id, anchor});
      s.static_values = {site_clutter.count(key.site_id) ? site_clutter[key.site_id] : std::string{},
                         rec->config.at(0),
                         rec->config.at(1),
                         rec->config.at(2),
                         station_clutter.count(nearest_id) ? station_clutter[nearest_id] : std::string{},
                         fc == forecast.end() ? std::string{} : fc->second};
      set.samples.push_back(std::move(s));
    }
  }
  std::stable_sort(set.samples.begin(), set.samples.end(), [](const Sample& a, const Sample& b) {
    return a.anchor != b.anchor ? a.anchor < b.anchor : a.link < b.link;
  });
  local.emitted = set.samples.size();
  if (report) *report = local;
  return set;
}

/// Per day and weather feature: mean, min, max and population standard
/// deviation across the k nearest stations, stored as
/// [window, (mean | min | max | std) × weather_features].
inline void derive_knn_weather_features(SampleSet& set, std::size_t k = 3) {
  if (k == 0 || k > set.max_k) throw PreconditionError("derive_knn_weather_features: k must be in [1, max_k]");
  const std::size_t wf = set.weather_features.size(), window = set.window;
  for (auto& s : set.samples) {
    if (s.station_windows.size() < k) throw PreconditionError("derive_knn_weather_features: sample has fewer than k stations");
    s.derived.assign(window * 4 * wf, 0.0);
    for (std::size_t t = 0; t < window; ++t)
      for (std::size_t f = 0; f < wf; ++f) {
        double sum = 0, lo = s.station_windows[0][t * wf + f], hi = lo;
        for (std::size_t j = 0; j < k; ++j) {
          const double v = s.station_windows[j][t * wf + f];
          sum += v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        const double mean = sum / static_cast<double>(k);
        double ss = 0;
        for (std::size_t j = 0; j < k; ++j) {
          const double d = s.station_windows[j][t * wf + f] - mean;
          ss += d * d;
        }
        double* row = s.derived.data() + t * 4 * wf;
        row[f] = mean;
        row[wf + f] = lo;
        row[2 * wf + f] = hi;
        row[3 * wf + f] = std::sqrt(ss / static_cast<double>(k));
      }
  }
  set.derived_k = k;
}

/// Re-derives every sample from the source tables and counts mismatches:
/// window values that differ from the table rows dated anchor-window+1 ..
/// anchor, a label not taken from anchor+1, or station order not ascending
/// by distance.
inline std::size_t audit_samples(const SampleSet& set, const LinkDayTable& kpis, const WeatherDayTable& weather) {
  std::map<std::pair<LinkKey, Date>, const LinkDayRecord*> link_at;
  for (const auto& r : kpis.rows) link_at[{r.link, r.date}] = &r;
  std::map<std::pair<std::string, Date>, const WeatherDayRecord*> station_at;
  for (const auto& r : weather.rows) station_at[{r.station_id, r.date}] = &r;
  const std::size_t lf = set.link_features.size(), wf = set.weather_features.size();
  std::size_t violations = 0;
  for (const auto& s : set.samples) {
    bool ok = true;
    const auto label_row = link_at.find({s.link, s.anchor + 1});
    ok &= label_row != link_at.end() && (label_row->second->failed ? 1 : 0) == s.label;
    for (std::size_t t = 0; t < set.window && ok; ++t) {
      const Date day = s.anchor - static_cast<std::int32_t>(set.window - 1 - t);
      ok &= day < s.anchor + 1;
      const auto lr = link_at.find({s.link, day});
      ok &= lr != link_at.end() && std::equal(lr->second->kpis.begin(), lr->second->kpis.end(), s.link_window.begin() + t * lf);
      for (std::size_t j = 0; j < s.station_windows.size() && ok; ++j) {
        const auto wr = station_at.find({s.station_ids[j], day});
        ok &= wr != station_at.end() &&
              std::equal(wr->second->observations.begin(), wr->second->observations.end(), s.station_windows[j].begin() + t * wf);
      }
    }
    for (std::size_t j = 1; j < s.station_distances.size(); ++j) ok &= s.station_distances[j - 1] <= s.station_distances[j];
    violations += ok ? 0 : 1;
  }
  return violations;
}

}  // namespace gentrap::data
