#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gentrap/dataset/pipeline.hpp"
#include "gentrap/dataset/store.hpp"

using namespace gentrap;
using namespace gentrap::data;

namespace {

CsvTable csv(const std::string& text, const std::string& name = "t") {
  std::istringstream is(text);
  return parse_csv(is, name);
}

const std::string kKpiHeader = "site_id,mini_link_id,date,card_type,modulation,freq_band,link_status,rx_level_min,capacity_mbps\n";

// One site, one link, `days` consecutive days starting 2020-01-01, three
// stations at the given distances. Failure on the days listed.
RawTables tiny_world(std::size_t days, std::vector<std::size_t> fail_days, std::vector<double> distances = {3, 1, 2}) {
  std::string kpi = kKpiHeader;
  std::string weather = "station_id,timestamp,temperature,precipitation\n";
  std::string dist = "site_id,station_id,distance\n";
  const Date start = Date::from_ymd(2020, 1, 1);
  for (std::size_t d = 0; d < days; ++d) {
    const bool failed = std::find(fail_days.begin(), fail_days.end(), d + 1) != fail_days.end();
    kpi += "S1,L1," + (start + static_cast<int>(d)).str() + ",C1,QPSK,18GHz," + (failed ? "1" : "0") + "," +
           std::to_string(-40.0 - static_cast<double>(d)) + ",100\n";
  }
  for (std::size_t s = 0; s < distances.size(); ++s) {
    const std::string id = "W" + std::to_string(s + 1);
    dist += "S1," + id + "," + format_number(distances[s]) + "\n";
    for (std::size_t d = 0; d < days; ++d)
      weather += id + "," + (start + static_cast<int>(d)).str() + " 12:00," + std::to_string(static_cast<double>(s) * 10 + static_cast<double>(d)) + ",0\n";
  }
  RawTables t;
  t.sites = parse_sites(csv("site_id,height,clutter_class\nS1,20,urban\n"));
  t.stations = parse_stations(csv("station_id,height,clutter_class\nW1,5,open_land\nW2,5,urban\nW3,5,water\n"));
  t.kpis = parse_kpis(csv(kpi, "rl-kpis"));
  t.weather_hourly = parse_weather_hourly(csv(weather, "met-real"));
  t.distances = parse_distances(csv(dist));
  return t;
}

SampleSet dated_samples(std::size_t n) {
  SampleSet set;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.link = {"S1", "L1"};
    s.anchor = Date::from_ymd(2020, 1, 1) + static_cast<int>(i);
    set.samples.push_back(s);
  }
  return set;
}

}  // namespace

TEST(Loading, KpiRowParsesAndUnexpectedStringIsMissing) {
  const auto t = parse_kpis(csv(kKpiHeader + "S1,L1,2020-01-01,C1,QPSK,18GHz,1,-41.5,ERR\n", "rl-kpis"));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.kpi_names, (std::vector<std::string>{"rx_level_min", "capacity_mbps"}));
  EXPECT_TRUE(t.rows[0].failed);
  EXPECT_DOUBLE_EQ(t.rows[0].kpis[0], -41.5);
  EXPECT_TRUE(is_missing(t.rows[0].kpis[1]));
  EXPECT_EQ(t.rows[0].config, (std::vector<std::string>{"C1", "QPSK", "18GHz"}));
}

TEST(Loading, EmptyFileGivesEmptyTable) {
  const auto t = parse_kpis(csv("", "rl-kpis"));
  EXPECT_TRUE(t.rows.empty());
  EXPECT_TRUE(parse_weather_hourly(csv("")).rows.empty());
}

TEST(Loading, MissingColumnNamesTableAndColumn) {
  try {
    parse_kpis(csv("site_id,date,link_status\nS1,2020-01-01,0\n", "rl-kpis"));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("rl-kpis"), std::string::npos);
    EXPECT_NE(msg.find("mini_link_id"), std::string::npos);
  }
}

TEST(Loading, BadStatusAndNegativeDistanceRejected) {
  EXPECT_THROW(parse_kpis(csv(kKpiHeader + "S1,L1,2020-01-01,C1,QPSK,18GHz,2,1,1\n")), DataError);
  EXPECT_THROW(parse_distances(csv("site_id,station_id,distance\nS1,W1,-1\n")), DataError);
}

TEST(Align, ConstantHoursAverageToValue) {
  WeatherHourlyTable h{{"temperature"}, {}};
  for (int i = 0; i < 24; ++i) h.rows.push_back({"W1", Date::from_ymd(2020, 1, 1), i, {5.0}});
  const auto d = align_weather_daily(h);
  ASSERT_EQ(d.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(d.rows[0].observations[0], 5.0);
}

TEST(Align, PartialAndAllMissing) {
  WeatherHourlyTable h{{"temperature", "humidity"}, {}};
  for (int i = 0; i < 24; ++i) {
    const double t = i == 0 ? 0.0 : i == 1 ? 10.0 : kMissing;
    h.rows.push_back({"W1", Date::from_ymd(2020, 1, 1), i, {t, kMissing}});
  }
  const auto d = align_weather_daily(h);
  EXPECT_DOUBLE_EQ(d.rows[0].observations[0], 5.0);
  EXPECT_TRUE(is_missing(d.rows[0].observations[1]));
}

TEST(Drop, ThresholdIsInclusive) {
  LinkDayTable t{{"a", "b", "c"}, {}};
  for (int i = 0; i < 20; ++i) {
    LinkDayRecord r;
    r.link = {"S1", "L1"};
    r.date = Date::from_ymd(2020, 1, 1) + i;
    r.config = {"C1", "QPSK", "18GHz"};
    r.kpis = {i < 5 ? kMissing : 1.0, 1.0, i < 4 ? kMissing : 1.0};  // 25%, 0%, exactly 20%
    t.rows.push_back(r);
  }
  const auto [out, report] = drop_sparse_features(t, 0.20);
  EXPECT_EQ(out.kpi_names, std::vector<std::string>{"b"});
  EXPECT_EQ(report.dropped, (std::vector<std::string>{"a", "c"}));
  for (const auto& r : out.rows) EXPECT_EQ(r.kpis.size(), 1u);
  EXPECT_DOUBLE_EQ(report.missing_fraction[2], 0.20);
}

TEST(Interpolate, HandCases) {
  const std::vector<Date> dates{Date{0}, Date{1}, Date{2}};
  std::vector<double> a{1, kMissing, 3};
  EXPECT_EQ(interpolate_series(dates, a), 1u);
  EXPECT_EQ(a, (std::vector<double>{1, 2, 3}));
  std::vector<double> b{kMissing, 4, 4};
  interpolate_series(dates, b);
  EXPECT_EQ(b, (std::vector<double>{4, 4, 4}));
  std::vector<double> c{7, 8, 9};
  EXPECT_EQ(interpolate_series(dates, c), 0u);
  EXPECT_EQ(c, (std::vector<double>{7, 8, 9}));
  std::vector<double> d{kMissing, kMissing, kMissing};
  EXPECT_THROW(interpolate_series(dates, d), DataError);
}

TEST(Interpolate, UsesDateDistanceNotRowDistance) {
  const std::vector<Date> dates{Date{0}, Date{1}, Date{4}};
  std::vector<double> v{0, kMissing, 8};
  interpolate_series(dates, v);
  EXPECT_DOUBLE_EQ(v[1], 2.0);
}

TEST(BuildSamples, NextDayLabel) {
  const auto raw = tiny_world(6, {6});
  const auto daily = align_weather_daily(raw.weather_hourly);
  const auto set = build_samples(raw, raw.kpis, daily, 5, 3);
  ASSERT_EQ(set.samples.size(), 1u);
  EXPECT_EQ(set.samples[0].anchor, Date::from_ymd(2020, 1, 5));
  EXPECT_EQ(set.samples[0].label, 1);
  EXPECT_EQ(set.samples[0].link_window.size(), 5u * 2u);
  EXPECT_DOUBLE_EQ(set.samples[0].link_window[4 * 2], -44.0);  // last window row is the anchor day
}

TEST(BuildSamples, ShortHistoryEmitsNothing) {
  const auto raw = tiny_world(4, {});
  const auto set = build_samples(raw, raw.kpis, align_weather_daily(raw.weather_hourly), 5, 3);
  EXPECT_TRUE(set.samples.empty());
}

TEST(BuildSamples, StationsSortedByDistance) {
  const auto raw = tiny_world(6, {});
  const auto set = build_samples(raw, raw.kpis, align_weather_daily(raw.weather_hourly), 5, 3);
  ASSERT_EQ(set.samples.size(), 1u);
  const auto& s = set.samples[0];
  EXPECT_EQ(s.station_ids, (std::vector<std::string>{"W2", "W3", "W1"}));
  EXPECT_EQ(s.station_distances, (std::vector<double>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(s.station_windows[0][0], 10.0);  // W2 temperature on day 1
  EXPECT_EQ(s.static_values[0], "urban");
  EXPECT_EQ(s.static_values[4], "urban");  // nearest station's clutter
}

TEST(BuildSamples, TooFewStationsIsConfigError) {
  const auto raw = tiny_world(6, {}, {1, 2});
  EXPECT_THROW(build_samples(raw, raw.kpis, align_weather_daily(raw.weather_hourly), 5, 3), ConfigError);
}

TEST(BuildSamples, GapSkipsAnchorAndCounts) {
  auto raw = tiny_world(8, {});
  raw.kpis.rows.erase(raw.kpis.rows.begin() + 2);  // drop day 3
  BuildReport report;
  const auto set = build_samples(raw, raw.kpis, align_weather_daily(raw.weather_hourly), 5, 3, &report);
  EXPECT_GT(report.skipped_gaps, 0u);
  for (const auto& s : set.samples) EXPECT_GE(s.anchor, Date::from_ymd(2020, 1, 7));
}

TEST(Folds, SeventyTwentyTen) {
  const auto set = dated_samples(100);
  const auto folds = rolling_origin_folds(set, 5);
  ASSERT_EQ(folds.size(), 5u);
  EXPECT_EQ(folds[0].train.size(), 70u);
  EXPECT_EQ(folds[0].validation.size(), 20u);
  EXPECT_EQ(folds[0].test.size(), 10u);
  EXPECT_EQ(folds[0].train.front(), 0u);
  EXPECT_EQ(folds[0].test.back(), 99u);
  EXPECT_EQ(folds[1].train.size(), 60u);
  EXPECT_EQ(folds[1].validation.front(), 60u);
  EXPECT_EQ(folds[1].validation.back(), 79u);
  EXPECT_EQ(folds[1].test.front(), 80u);
  EXPECT_EQ(folds[1].test.back(), 89u);
  for (const auto& f : folds) EXPECT_TRUE(fold_is_time_ordered(set, f));
}

TEST(Folds, DatesNeverStraddleBoundaries) {
  SampleSet set;
  for (int d = 0; d < 30; ++d)
    for (int l = 0; l < 7; ++l) {
      Sample s;
      s.link = {"S" + std::to_string(l), "L1"};
      s.anchor = Date{d};
      set.samples.push_back(s);
    }
  for (const auto& f : rolling_origin_folds(set, 5)) EXPECT_TRUE(fold_is_time_ordered(set, f));
}

TEST(Folds, Errors) {
  EXPECT_THROW(rolling_origin_folds(dated_samples(49), 5), ConfigError);
  EXPECT_THROW(rolling_origin_folds(dated_samples(100), 8), ConfigError);
  auto unsorted = dated_samples(100);
  std::swap(unsorted.samples[0], unsorted.samples[50]);
  EXPECT_THROW(rolling_origin_folds(unsorted, 5), PreconditionError);
}

TEST(Folds, OrderingCheckDetectsOverlap) {
  const auto set = dated_samples(100);
  auto f = rolling_origin_folds(set, 1)[0];
  f.validation.push_back(f.train.back());
  EXPECT_FALSE(fold_is_time_ordered(set, f));
}

namespace {
SampleSet one_step_set(std::vector<double> station_values) {
  SampleSet set;
  set.window = 1;
  set.max_k = station_values.size();
  set.weather_features = {"precipitation"};
  Sample s;
  for (double v : station_values) s.station_windows.push_back({v});
  set.samples.push_back(s);
  return set;
}
}  // namespace

TEST(Derived, HandStatistics) {
  auto set = one_step_set({2, 4, 6});
  derive_knn_weather_features(set, 3);
  const auto& d = set.samples[0].derived;
  ASSERT_EQ(d.size(), 4u);
  EXPECT_DOUBLE_EQ(d[0], 4.0);
  EXPECT_DOUBLE_EQ(d[1], 2.0);
  EXPECT_DOUBLE_EQ(d[2], 6.0);
  EXPECT_NEAR(d[3], std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_NEAR(d[3], 1.633, 1e-3);
}

TEST(Derived, SingleStationAndPermutation) {
  auto one = one_step_set({7, 1, 1});
  derive_knn_weather_features(one, 1);
  EXPECT_EQ(one.samples[0].derived, (std::vector<double>{7, 7, 7, 0}));
  auto a = one_step_set({1.5, -3, 8}), b = one_step_set({8, 1.5, -3});
  derive_knn_weather_features(a, 3);
  derive_knn_weather_features(b, 3);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a.samples[0].derived[i], b.samples[0].derived[i], 1e-12);
  EXPECT_THROW(derive_knn_weather_features(a, 4), PreconditionError);
}

TEST(Store, RoundTripIsExact) {
  const auto raw = tiny_world(9, {7});
  auto prep = build_samples(raw, raw.kpis, align_weather_daily(raw.weather_hourly), 5, 3);
  derive_knn_weather_features(prep, 3);
  std::stringstream ss;
  write_sample_store(ss, prep);
  const auto back = read_sample_store(ss);
  ASSERT_EQ(back.samples.size(), prep.samples.size());
  EXPECT_EQ(back.link_features, prep.link_features);
  EXPECT_EQ(back.derived_k, 3u);
  for (std::size_t i = 0; i < prep.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].link_window, prep.samples[i].link_window);
    EXPECT_EQ(back.samples[i].station_windows, prep.samples[i].station_windows);
    EXPECT_EQ(back.samples[i].derived, prep.samples[i].derived);
    EXPECT_EQ(back.samples[i].label, prep.samples[i].label);
    EXPECT_EQ(back.samples[i].anchor, prep.samples[i].anchor);
  }
  std::stringstream bad("NOTASTORE");
  EXPECT_THROW(read_sample_store(bad), SchemaError);
}
