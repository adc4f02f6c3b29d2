#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gentrap/dataset/csv.hpp"
#include "gentrap/dataset/date.hpp"
#include "gentrap/dataset/tables.hpp"
#include "gentrap/error.hpp"

namespace gentrap::synth {

enum class CausalKind { logistic, step };

/// Knobs of a synthetic deployment. Failures on day t are driven by the
/// icing load (precipitation while below the freezing point) observed on
/// day t-1 at one "relevant" station per link, scaled by the link's
/// frequency-band sensitivity.
struct ScenarioConfig {
  std::uint64_t seed = 7;
  std::size_t n_sites = 100;
  std::size_t links_per_site = 2;
  std::size_t n_stations = 10;
  std::size_t n_days = 300;
  std::string start_date = "2020-01-01";
  double target_failure_rate = 0.003;
  std::size_t max_k = 3;
  // Share of links whose relevant station is the 2nd or 3rd nearest instead
  // of the nearest.
  double variable_station_fraction = 0.5;

  double precipitation_regional_weight = 0.1;
  double temperature_mean = 2.0;
  double temperature_regional_sd = 1.0;
  double temperature_local_sd = 4.0;

  CausalKind causal_kind = CausalKind::logistic;
  double coupling = 6.0;  // logit per unit icing load; 0 decouples failures from weather
  double freeze_point = 0.0;
  double fade_db_per_mm = 0.8;

  double missing_fraction = 0.07;
  double garbage_fraction = 0.002;

  std::size_t link_count() const { return n_sites * links_per_site; }
};

struct FailureCause {
  data::LinkKey link;
  data::Date date;
  std::string station_id;
  double trigger = 0;
};

struct GroundTruth {
  CausalKind kind = CausalKind::logistic;
  double intercept = 0;
  double coupling = 0;
  double step_threshold = 0;
  std::map<data::LinkKey, std::string> relevant_station;
  // keyed by the day whose status the value drives
  std::map<std::pair<data::LinkKey, data::Date>, double> trigger;
  std::vector<FailureCause> failures;
  std::vector<std::string> weather_features;
  std::map<std::pair<std::string, data::Date>, std::vector<double>> daily_weather;
  std::size_t link_days = 0;

  double failure_probability(double trigger_value) const {
    if (kind == CausalKind::step) return trigger_value > step_threshold ? 1.0 : 0.0;
    return 1.0 / (1.0 + std::exp(-(intercept + coupling * trigger_value)));
  }

  /// Bayes decision of a predictor that knows the causal station and rule.
  bool clairvoyant_prediction(double trigger_value) const { return failure_probability(trigger_value) >= 0.5; }

  double realized_rate() const { return link_days ? static_cast<double>(failures.size()) / static_cast<double>(link_days) : 0.0; }
};

/// Generated files (name → delimited text) plus the causal record.
struct Scenario {
  std::vector<std::pair<std::string, std::string>> files;
  GroundTruth truth;

  const std::string& file(const std::string& name) const {
    for (const auto& [n, text] : files)
      if (n == name) return text;
    throw DataError("scenario has no file " + name);
  }

  data::RawTables tables() const {
    const auto parse = [&](const char* name, const char* label) {
      std::istringstream is(file(name));
      return data::parse_csv(is, label);
    };
    data::RawTables t;
    t.sites = data::parse_sites(parse(data::schema::kSitesFile, "rl-sites"));
    t.kpis = data::parse_kpis(parse(data::schema::kKpisFile, "rl-kpis"));
    t.stations = data::parse_stations(parse(data::schema::kStationsFile, "met-stations"));
    t.weather_hourly = data::parse_weather_hourly(parse(data::schema::kWeatherFile, "met-real"));
    t.forecast = data::parse_forecast(parse(data::schema::kForecastFile, "met-forecast"));
    t.distances = data::parse_distances(parse(data::schema::kDistancesFile, "distances"));
    return t;
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : files) {
      std::ofstream os(dir / name, std::ios::binary);
      if (!os) throw DataError("cannot write " + (dir / name).string());
      os << text;
      if (!os) throw DataError("failed writing " + (dir / name).string());
    }
  }
};

inline constexpr const char* kGroundTruthFile = "ground-truth.csv";

namespace detail {

inline const std::vector<std::string> kClutter{"open_land", "dense_trees", "suburban", "urban", "water"};
inline const std::vector<std::string> kCards{"C1", "C2", "C3"};
inline const std::vector<std::string> kModulations{"QPSK", "16QAM", "64QAM", "256QAM"};
inline const std::vector<double> kModulationCapacity{100, 200, 300, 400};
inline const std::vector<std::string> kBands{"18GHz", "23GHz", "38GHz", "80GHz"};
inline const std::vector<double> kBandSensitivity{0.6, 0.8, 1.0, 1.3};
inline const std::vector<std::string> kWeatherDays{"clear", "scattered_clouds", "rain", "snow"};

inline const std::vector<std::string> kWeatherFeatures{"temperature", "humidity",  "precipitation", "wind_speed",
                                                        "wind_direction", "pressure", "visibility"};
inline const std::vector<std::string> kKpiFeatures{"errored_seconds", "severely_errored_seconds", "unavailable_seconds",
                                                    "background_block_errors", "rx_level_min", "rx_level_max",
                                                    "tx_level_min", "tx_level_max", "capacity_mbps"};
enum WeatherIndex { kTemp, kHumidity, kPrecip, kWindSpeed, kWindDir, kPressure, kVisibility };

inline std::string padded(const char* prefix, std::size_t i, std::size_t count) {
  const int width = static_cast<int>(std::to_string(count).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i + 1);
  return buf;
}

/// Stationary AR(1) series with the given marginal standard deviation.
inline std::vector<double> ar1(std::size_t n, double phi, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out(n);
  double x = z(rng) * sd;
  const double innovation = sd * std::sqrt(1.0 - phi * phi);
  for (auto& v : out) {
    v = x;
    x = phi * x + innovation * z(rng);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += fields[i];
  }
  s += '\n';
  return s;
}

}  // namespace detail

/// Builds a complete six-table scenario. Single random stream, so output is
/// byte-identical for a given config.
inline Scenario generate(const ScenarioConfig& cfg) {
  using namespace detail;
  if (cfg.n_days < 30) throw ConfigError("generate: n_days must be >= 30");
  if (cfg.n_stations < cfg.max_k || cfg.max_k == 0) throw ConfigError("generate: n_stations must be >= max_k >= 1");
  if (cfg.n_sites == 0 || cfg.links_per_site == 0) throw ConfigError("generate: need at least one link");
  if (!(cfg.target_failure_rate > 0.0 && cfg.target_failure_rate < 1.0))
    throw ConfigError("generate: target failure rate must lie in (0, 1); achievable range is (0, 1) for the logistic rule");
  if (!(cfg.missing_fraction >= 0 && cfg.missing_fraction + cfg.garbage_fraction < 0.2))
    throw ConfigError("generate: blanked cell fraction must stay below the 20% drop threshold");
  const auto start = data::Date::parse(cfg.start_date);
  if (!start) throw ConfigError("generate: bad start_date " + cfg.start_date);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto pick = [&](std::size_t n) { return static_cast<std::size_t>(unit(rng) * static_cast<double>(n)) % n; };

  Scenario sc;
  GroundTruth& truth = sc.truth;
  truth.weather_features = kWeatherFeatures;

  // --- topology ---
  struct Station {
    std::string id;
    double x, y, height;
    std::string clutter;
  };
  std::vector<Station> stations;
  for (std::size_t i = 0; i < cfg.n_stations; ++i)
    stations.push_back({padded("W", i, cfg.n_stations), unit(rng) * 100, unit(rng) * 100, 5 + unit(rng) * 40, kClutter[pick(kClutter.size())]});

  struct Link {
    data::LinkKey key;
    std::size_t card, modulation, band;
    double rx_base, tx_base;
    std::size_t relevant;  // station index
  };
  struct Site {
    std::string id;
    double x, y, height;
    std::string clutter;
  };
  std::vector<Site> sites;
  std::vector<Link> links;
  std::map<std::pair<std::string, std::string>, double> distance;
  for (std::size_t i = 0; i < cfg.n_sites; ++i) {
    Site s{padded("S", i, cfg.n_sites), unit(rng) * 100, unit(rng) * 100, 10 + unit(rng) * 50, kClutter[pick(kClutter.size())]};
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t w = 0; w < stations.size(); ++w) {
      const double d = std::hypot(s.x - stations[w].x, s.y - stations[w].y);
      distance[{s.id, stations[w].id}] = d;
      order.emplace_back(d, w);
    }
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : stations[a.second].id < stations[b.second].id;
    });
    for (std::size_t l = 0; l < cfg.links_per_site; ++l) {
      Link link{{s.id, "L" + std::to_string(l + 1)}, pick(kCards.size()), pick(kModulations.size()), pick(kBands.size()),
                -45 + gauss(rng) * 3, 15 + gauss(rng) * 2, 0};
      std::size_t rank = 0;
      if (cfg.max_k > 1 && unit(rng) < cfg.variable_station_fraction) rank = 1 + pick(cfg.max_k - 1);
      link.relevant = order[rank].second;
      truth.relevant_station[link.key] = stations[link.relevant].id;
      links.push_back(link);
    }
    sites.push_back(std::move(s));
  }

  // --- daily weather ---
  const std::size_t nd = cfg.n_days, ns = stations.size(), nf = kWeatherFeatures.size();
  const auto reg_temp = ar1(nd, 0.8, cfg.temperature_regional_sd, rng);
  const auto reg_precip = ar1(nd, 0.4, 1.0, rng);
  const auto reg_wind = ar1(nd, 0.6, 1.0, rng);
  const auto reg_dir = ar1(nd, 0.7, 1.0, rng);
  const auto reg_press = ar1(nd, 0.8, 1.0, rng);
  const double wr = std::clamp(cfg.precipitation_regional_weight, 0.0, 1.0);
  std::vector<std::vector<std::vector<double>>> weather(ns, std::vector<std::vector<double>>(nd, std::vector<double>(nf)));
  for (std::size_t w = 0; w < ns; ++w) {
    const auto loc_temp = ar1(nd, 0.6, cfg.temperature_local_sd, rng);
    const auto loc_precip = ar1(nd, 0.3, 1.0, rng);
    for (std::size_t t = 0; t < nd; ++t) {
      const double z = std::sqrt(wr) * reg_precip[t] + std::sqrt(1 - wr) * loc_precip[t];
      auto& o = weather[w][t];
      o[kTemp] = cfg.temperature_mean + reg_temp[t] + loc_temp[t];
      o[kPrecip] = std::max(0.0, z - 0.5) * 6.0;
      o[kHumidity] = std::clamp(65 + 15 * z + 5 * gauss(rng), 5.0, 100.0);
      o[kWindSpeed] = std::max(0.0, 3 + 1.5 * reg_wind[t] + gauss(rng) + 0.8 * std::max(z, 0.0));
      o[kWindDir] = std::fmod(720 + 200 + 60 * reg_dir[t] + 30 * gauss(rng), 360.0);
      o[kPressure] = 1013 - 6 * z + 4 * reg_press[t] + gauss(rng);
      o[kVisibility] = std::max(0.1, 20 - 3 * std::max(z, 0.0) + gauss(rng));
      truth.daily_weather[{stations[w].id, *start + static_cast<std::int32_t>(t)}] = o;
    }
  }
  const auto icing = [&](std::size_t w, std::size_t t) {
    const auto& o = weather[w][t];
    return o[kTemp] < cfg.freeze_point ? o[kPrecip] : 0.0;
  };

  // --- causal rule calibration ---
  std::vector<double> triggers;  // link-major, day-minor
  triggers.reserve(links.size() * nd);
  for (const auto& l : links)
    for (std::size_t t = 0; t < nd; ++t) triggers.push_back(t == 0 ? 0.0 : kBandSensitivity[l.band] * icing(l.relevant, t - 1));
  truth.kind = cfg.causal_kind;
  truth.coupling = cfg.coupling;
  truth.link_days = triggers.size();
  if (cfg.causal_kind == CausalKind::step) {
    std::vector<double> sorted = triggers;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double positive =
        static_cast<double>(std::count_if(sorted.begin(), sorted.end(), [](double v) { return v > 0; })) / static_cast<double>(sorted.size());
    if (cfg.target_failure_rate > positive)
      throw ConfigError("generate: target failure rate " + std::to_string(cfg.target_failure_rate) +
                        " infeasible for the step rule; achievable range is (0, " + std::to_string(positive) + "]");
    const auto n = static_cast<std::size_t>(std::llround(cfg.target_failure_rate * static_cast<double>(sorted.size())));
    truth.step_threshold = n == 0 ? sorted.front() : sorted[n];
  } else {
    const auto mean_rate = [&](double intercept) {
      double s = 0;
      for (double v : triggers) s += 1.0 / (1.0 + std::exp(-(intercept + cfg.coupling * v)));
      return s / static_cast<double>(triggers.size());
    };
    const double peak = triggers.empty() ? 0.0 : *std::max_element(triggers.begin(), triggers.end());
    double lo = -60 - std::abs(cfg.coupling) * peak, hi = 60;
    const double min_rate = mean_rate(lo), max_rate = mean_rate(hi);
    if (cfg.target_failure_rate < min_rate || cfg.target_failure_rate > max_rate)
      throw ConfigError("generate: target failure rate infeasible; achievable range is [" + std::to_string(min_rate) + ", " +
                        std::to_string(max_rate) + "]");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mean_rate(mid) < cfg.target_failure_rate ? lo : hi) = mid;
    }
    truth.intercept = 0.5 * (lo + hi);
  }

  // --- link days ---
  std::string kpi_text = join([&] {
    std::vector<std::string> h = data::schema::kKpiKeyColumns;
    h.insert(h.end(), kKpiFeatures.begin(), kKpiFeatures.end());
    return h;
  }());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto cell = [&](double v) -> std::string {
    const double r = u01(rng);
    if (r < cfg.missing_fraction) return {};
    if (r < cfg.missing_fraction + cfg.garbage_fraction) return "ERR";
    return data::format_number(v);
  };
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& l = links[li];
    for (std::size_t t = 0; t < nd; ++t) {
      const double trig = triggers[li * nd + t];
      const bool failed = u01(rng) < truth.failure_probability(trig);
      const data::Date day = *start + static_cast<std::int32_t>(t);
      truth.trigger[{l.key, day}] = trig;
      if (failed) truth.failures.push_back({l.key, day, stations[l.relevant].id, trig});
      const double fade = cfg.fade_db_per_mm * kBandSensitivity[l.band] * weather[l.relevant][t][kPrecip];
      const double f = failed ? 1.0 : 0.0;
      std::vector<double> k(kKpiFeatures.size());
      k[0] = std::round(std::exp(0.5 + 0.8 * gauss(rng)) + 2 * fade + f * (500 + 4500 * u01(rng)));
      k[1] = std::round(0.2 * k[0] * u01(rng) + f * (200 + 1800 * u01(rng)));
      k[2] = failed ? std::round(600 + 85800 * u01(rng)) : (u01(rng) < 0.02 ? std::round(1 + 59 * u01(rng)) : 0.0);
      k[3] = std::round(std::exp(2 + gauss(rng)) + 10 * fade + f * (1e4 + 9e4 * u01(rng)));
      k[4] = l.rx_base - 4 - fade + gauss(rng) - f * (15 + 15 * u01(rng));
      k[5] = l.rx_base + 0.5 * gauss(rng) - 0.3 * fade;
      k[6] = l.tx_base - 2 + 0.3 * gauss(rng);
      k[7] = l.tx_base + std::min(10.0, 0.5 * fade) + 0.3 * gauss(rng);
      k[8] = kModulationCapacity[l.modulation] * (fade > 10 ? 0.5 : 1.0) + 2 * gauss(rng);
      std::vector<std::string> row{l.key.site_id, l.key.mini_link_id, day.str(), kCards[l.card], kModulations[l.modulation],
                                   kBands[l.band], failed ? "1" : "0"};
      for (double v : k) row.push_back(cell(v));
      kpi_text += join(row);
    }
  }

  // --- hourly weather, forecasts ---
  std::string weather_text = join([&] {
    std::vector<std::string> h = data::schema::kWeatherKeyColumns;
    h.insert(h.end(), kWeatherFeatures.begin(), kWeatherFeatures.end());
    return h;
  }());
  std::string forecast_text = join(data::schema::kForecastColumns);
  const double pi = std::acos(-1.0);
  const std::vector<double> amplitude{3.0, 8.0, 0.0, 1.0, 10.0, 1.0, 2.0};
  for (std::size_t w = 0; w < ns; ++w)
    for (std::size_t t = 0; t < nd; ++t) {
      const auto& o = weather[w][t];
      const data::Date day = *start + static_cast<std::int32_t>(t);
      std::vector<std::vector<double>> hours(24, std::vector<double>(nf));
      for (std::size_t f = 0; f < nf; ++f) {
        std::vector<double> dev(24);
        if (f == kPrecip) {
          double total = 0;
          for (auto& d : dev) total += (d = -std::log(1.0 - u01(rng) * 0.999999));
          for (std::size_t h = 0; h < 24; ++h) hours[h][f] = o[f] * dev[h] * 24.0 / total;
        } else {
          double mean = 0;
          for (std::size_t h = 0; h < 24; ++h) mean += (dev[h] = 0.2 * amplitude[f] * gauss(rng));
          mean /= 24.0;
          for (std::size_t h = 0; h < 24; ++h)
            hours[h][f] = o[f] + amplitude[f] * std::sin(2 * pi * (static_cast<double>(h) - 9) / 24.0) + dev[h] - mean;
        }
      }
      std::vector<int> blank(nf, 0);  // 1 = empty, 2 = garbage, for the whole day
      for (auto& b : blank) {
        const double r = u01(rng);
        b = r < cfg.missing_fraction ? 1 : (r < cfg.missing_fraction + cfg.garbage_fraction ? 2 : 0);
      }
      char stamp[32];
      for (std::size_t h = 0; h < 24; ++h) {
        std::snprintf(stamp, sizeof stamp, "%s %02zu:00", day.str().c_str(), h);
        std::vector<std::string> row{stations[w].id, stamp};
        for (std::size_t f = 0; f < nf; ++f)
          row.push_back(blank[f] == 1 ? std::string{} : blank[f] == 2 ? std::string("ERR") : data::format_number(hours[h][f]));
        weather_text += join(row);
      }
      std::size_t category = o[kPrecip] > 1 ? (o[kTemp] < cfg.freeze_point ? 3 : 2) : (o[kHumidity] > 75 ? 1 : 0);
      if (u01(rng) < 0.1) category = pick(kWeatherDays.size());
      forecast_text += join({stations[w].id, day.str(), kWeatherDays[category]});
    }

  // --- metadata, distances, truth ---
  std::string sites_text = join(data::schema::kSiteColumns);
  for (const auto& s : sites) sites_text += join({s.id, data::format_number(s.height), s.clutter});
  std::string stations_text = join(data::schema::kStationColumns);
  for (const auto& s : stations) stations_text += join({s.id, data::format_number(s.height), s.clutter});
  std::string distance_text = join(data::schema::kDistanceColumns);
  for (const auto& [key, d] : distance) distance_text += join({key.first, key.second, data::format_number(d)});
  std::string truth_text = join({"failure_date", "site_id", "mini_link_id", "causal_station", "trigger_value"});
  for (const auto& f : truth.failures)
    truth_text += join({f.date.str(), f.link.site_id, f.link.mini_link_id, f.station_id, data::format_number(f.trigger)});

  sc.files = {{data::schema::kSitesFile, std::move(sites_text)},     {data::schema::kKpisFile, std::move(kpi_text)},
              {data::schema::kStationsFile, std::move(stations_text)}, {data::schema::kWeatherFile, std::move(weather_text)},
              {data::schema::kForecastFile, std::move(forecast_text)}, {data::schema::kDistancesFile, std::move(distance_text)},
              {kGroundTruthFile, std::move(truth_text)}};
  return sc;
}

}  // namespace gentrap::synth
