#pragma once

#include <algorithm>
#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gentrap/dataset/csv.hpp"
#include "gentrap/dataset/date.hpp"

namespace gentrap::data {

// Input schema. Every file is comma-delimited text with a header row. The
// listed key columns are required; in rl-kpis and met-real every other
// column is read as a numeric feature.
namespace schema {
inline constexpr const char* kSitesFile = "rl-sites.csv";
inline constexpr const char* kKpisFile = "rl-kpis.csv";
inline constexpr const char* kStationsFile = "met-stations.csv";
inline constexpr const char* kWeatherFile = "met-real.csv";
inline constexpr const char* kForecastFile = "met-forecast.csv";
inline constexpr const char* kDistancesFile = "distances.csv";

inline const std::vector<std::string> kSiteColumns{"site_id", "height", "clutter_class"};
inline const std::vector<std::string> kKpiKeyColumns{"site_id", "mini_link_id", "date", "card_type",
                                                     "modulation", "freq_band", "link_status"};
inline const std::vector<std::string> kKpiConfigColumns{"card_type", "modulation", "freq_band"};
inline const std::vector<std::string> kStationColumns{"station_id", "height", "clutter_class"};
inline const std::vector<std::string> kWeatherKeyColumns{"station_id", "timestamp"};
inline const std::vector<std::string> kForecastColumns{"station_id", "date", "weather_day"};
inline const std::vector<std::string> kDistanceColumns{"site_id", "station_id", "distance"};
}  // namespace schema

struct LinkKey {
  std::string site_id;
  std::string mini_link_id;
  auto operator<=>(const LinkKey&) const = default;
  std::string str() const { return site_id + "/" + mini_link_id; }
};

struct SiteMeta {
  std::string site_id;
  double height = 0;
  std::string clutter_class;
};

struct StationMeta {
  std::string station_id;
  double height = 0;
  std::string clutter_class;
};

struct LinkDayRecord {
  LinkKey link;
  Date date;
  std::vector<double> kpis;  // aligned with LinkDayTable::kpi_names; kMissing when absent
  std::vector<std::string> config;  // card_type, modulation, freq_band
  bool failed = false;
};

struct LinkDayTable {
  std::vector<std::string> kpi_names;
  std::vector<LinkDayRecord> rows;
};

struct WeatherHourRecord {
  std::string station_id;
  Date date;
  int hour = 0;
  std::vector<double> observations;
};

struct WeatherHourlyTable {
  std::vector<std::string> feature_names;
  std::vector<WeatherHourRecord> rows;
};

struct WeatherDayRecord {
  std::string station_id;
  Date date;
  std::vector<double> observations;
};

struct WeatherDayTable {
  std::vector<std::string> feature_names;
  std::vector<WeatherDayRecord> rows;
};

struct ForecastDayRecord {
  std::string station_id;
  Date date;
  std::string weather_day;
};

/// Site → station relative distances.
class DistanceTable {
 public:
  void set(const std::string& site, const std::string& station, double d) {
    if (!(d >= 0)) throw DataError("negative or non-numeric distance for " + site + "→" + station);
    entries_[{site, station}] = d;
  }

  const std::map<std::pair<std::string, std::string>, double>& entries() const { return entries_; }

  /// The k nearest stations of `site`, ascending by distance with ties broken
  /// by station id.
  std::vector<std::pair<std::string, double>> nearest(const std::string& site, std::size_t k) const {
    std::vector<std::pair<std::string, double>> all;
    for (auto it = entries_.lower_bound({site, std::string{}}); it != entries_.end() && it->first.first == site; ++it)
      all.emplace_back(it->first.second, it->second);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    if (all.size() > k) all.resize(k);
    return all;
  }

 private:
  std::map<std::pair<std::string, std::string>, double> entries_;
};

struct RawTables {
  std::vector<SiteMeta> sites;
  LinkDayTable kpis;
  std::vector<StationMeta> stations;
  WeatherHourlyTable weather_hourly;
  std::vector<ForecastDayRecord> forecast;
  DistanceTable distances;
};

struct TablePaths {
  std::filesystem::path sites, kpis, stations, weather, forecast, distances;

  static TablePaths in_directory(const std::filesystem::path& dir) {
    return {dir / schema::kSitesFile,   dir / schema::kKpisFile,     dir / schema::kStationsFile,
            dir / schema::kWeatherFile, dir / schema::kForecastFile, dir / schema::kDistancesFile};
  }
};

namespace detail {

inline std::vector<std::size_t> require_columns(const CsvTable& t, const std::vector<std::string>& cols) {
  std::vector<std::size_t> idx;
  if (t.header.empty()) return idx;  // empty file
  for (const auto& c : cols) idx.push_back(t.column(c));
  return idx;
}

inline std::vector<std::size_t> remaining_columns(const CsvTable& t, const std::vector<std::string>& keys) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (std::find(keys.begin(), keys.end(), t.header[i]) == keys.end()) idx.push_back(i);
  return idx;
}

inline Date require_date(const std::string& cell, const CsvTable& t, std::size_t row) {
  const auto d = Date::parse(cell);
  if (!d) throw DataError("table '" + t.name + "' row " + std::to_string(row + 1) + ": bad date '" + cell + "'");
  return *d;
}

}  // namespace detail

// The parse_* functions take already-read text tables so they can be fed
// from memory in tests.

inline std::vector<SiteMeta> parse_sites(const CsvTable& t) {
  const auto c = detail::require_columns(t, schema::kSiteColumns);
  std::vector<SiteMeta> out;
  for (const auto& r : t.rows) out.push_back({r[c[0]], parse_number(r[c[1]]), r[c[2]]});
  return out;
}

inline std::vector<StationMeta> parse_stations(const CsvTable& t) {
  const auto c = detail::require_columns(t, schema::kStationColumns);
  std::vector<StationMeta> out;
  for (const auto& r : t.rows) out.push_back({r[c[0]], parse_number(r[c[1]]), r[c[2]]});
  return out;
}

inline LinkDayTable parse_kpis(const CsvTable& t) {
  const auto c = detail::require_columns(t, schema::kKpiKeyColumns);
  const auto numeric = detail::remaining_columns(t, schema::kKpiKeyColumns);
  LinkDayTable out;
  for (auto i : numeric) out.kpi_names.push_back(t.header[i]);
  for (std::size_t ri = 0; ri < t.rows.size(); ++ri) {
    const auto& r = t.rows[ri];
    LinkDayRecord rec;
    rec.link = {r[c[0]], r[c[1]]};
    rec.date = detail::require_date(r[c[2]], t, ri);
    rec.config = {r[c[3]], r[c[4]], r[c[5]]};
    const double status = parse_number(r[c[6]]);
    if (status != 0.0 && status != 1.0)
      throw DataError("table '" + t.name + "' row " + std::to_string(ri + 1) + ": link_status must be 0 or 1");
    rec.failed = status == 1.0;
    for (auto i : numeric) rec.kpis.push_back(parse_number(r[i]));
    out.rows.push_back(std::move(rec));
  }
  return out;
}

inline WeatherHourlyTable parse_weather_hourly(const CsvTable& t) {
  const auto c = detail::require_columns(t, schema::kWeatherKeyColumns);
  const auto numeric = detail::remaining_columns(t, schema::kWeatherKeyColumns);
  WeatherHourlyTable out;
  for (auto i : numeric) out.feature_names.push_back(t.header[i]);
  for (std::size_t ri = 0; ri < t.rows.size(); ++ri) {
    const auto& r = t.rows[ri];
    WeatherHourRecord rec;
    rec.station_id = r[c[0]];
    rec.date = detail::require_date(r[c[1]], t, ri);
    rec.hour = parse_hour(r[c[1]]).value_or(0);
    for (auto i : numeric) rec.observations.push_back(parse_number(r[i]));
    out.rows.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<ForecastDayRecord> parse_forecast(const CsvTable& t) {
  const auto c = detail::require_columns(t, schema::kForecastColumns);
  std::vector<ForecastDayRecord> out;
  for (std::size_t ri = 0; ri < t.rows.size(); ++ri) {
    const auto& r = t.rows[ri];
    out.push_back({r[c[0]], detail::require_date(r[c[1]], t, ri), r[c[2]]});
  }
  return out;
}

inline DistanceTable parse_distances(const CsvTable& t) {
  const auto c = detail::require_columns(t, schema::kDistanceColumns);
  DistanceTable out;
  for (const auto& r : t.rows) out.set(r[c[0]], r[c[1]], parse_number(r[c[2]]));
  return out;
}

/// Reads all six tables. Unparseable numeric cells become missing values;
/// a missing key column is a SchemaError naming table and column.
inline RawTables load_tables(const TablePaths& paths) {
  RawTables t;
  t.sites = parse_sites(read_csv(paths.sites.string(), "rl-sites"));
  t.kpis = parse_kpis(read_csv(paths.kpis.string(), "rl-kpis"));
  t.stations = parse_stations(read_csv(paths.stations.string(), "met-stations"));
  t.weather_hourly = parse_weather_hourly(read_csv(paths.weather.string(), "met-real"));
  t.forecast = parse_forecast(read_csv(paths.forecast.string(), "met-forecast"));
  t.distances = parse_distances(read_csv(paths.distances.string(), "distances"));
  return t;
}

}  // namespace gentrap::data
