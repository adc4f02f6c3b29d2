#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gentrap/dataset/folds.hpp"
#include "gentrap/dataset/samples.hpp"

namespace gentrap::data {

// Binary sample store: "GTSAMPLE" magic, u32 version, then length-prefixed
// little-endian fields in declaration order. Doubles are stored bit-exact.

inline constexpr std::uint32_t kStoreVersion = 1;

namespace detail {

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <class T>
  void pod(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void size(std::size_t n) { pod(static_cast<std::uint64_t>(n)); }
  void str(const std::string& s) {
    size(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void strings(const std::vector<std::string>& v) {
    size(v.size());
    for (const auto& s : v) str(s);
  }
  void doubles(const std::vector<double>& v) {
    size(v.size());
    os_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  template <class T>
  T pod() {
    T v{};
    if (!is_.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("sample store truncated");
    return v;
  }
  std::size_t size() { return static_cast<std::size_t>(pod<std::uint64_t>()); }
  std::string str() {
    std::string s(size(), '\0');
    if (!is_.read(s.data(), static_cast<std::streamsize>(s.size()))) throw DataError("sample store truncated");
    return s;
  }
  std::vector<std::string> strings() {
    std::vector<std::string> v(size());
    for (auto& s : v) s = str();
    return v;
  }
  std::vector<double> doubles() {
    std::vector<double> v(size());
    if (!is_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
      throw DataError("sample store truncated");
    return v;
  }

 private:
  std::istream& is_;
};

}  // namespace detail

inline void write_sample_store(std::ostream& os, const SampleSet& set) {
  os.write("GTSAMPLE", 8);
  detail::Writer w(os);
  w.pod(kStoreVersion);
  w.size(set.window);
  w.size(set.max_k);
  w.size(set.derived_k);
  w.strings(set.link_features);
  w.strings(set.weather_features);
  w.strings(set.static_fields);
  w.size(set.samples.size());
  for (const auto& s : set.samples) {
    w.str(s.link.site_id);
    w.str(s.link.mini_link_id);
    w.pod(s.anchor.days);
    w.pod(static_cast<std::int32_t>(s.label));
    w.doubles(s.link_window);
    w.size(s.station_windows.size());
    for (const auto& sw : s.station_windows) w.doubles(sw);
    w.strings(s.station_ids);
    w.doubles(s.station_distances);
    w.strings(s.static_values);
    w.doubles(s.derived);
  }
}

inline SampleSet read_sample_store(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, "GTSAMPLE", 8) != 0) throw SchemaError("not a sample store (bad magic)");
  detail::Reader r(is);
  if (const auto v = r.pod<std::uint32_t>(); v != kStoreVersion) throw SchemaError("unsupported sample store version " + std::to_string(v));
  SampleSet set;
  set.window = r.size();
  set.max_k = r.size();
  set.derived_k = r.size();
  set.link_features = r.strings();
  set.weather_features = r.strings();
  set.static_fields = r.strings();
  set.samples.resize(r.size());
  for (auto& s : set.samples) {
    s.link.site_id = r.str();
    s.link.mini_link_id = r.str();
    s.anchor.days = r.pod<std::int32_t>();
    s.label = r.pod<std::int32_t>();
    s.link_window = r.doubles();
    s.station_windows.resize(r.size());
    for (auto& sw : s.station_windows) sw = r.doubles();
    s.station_ids = r.strings();
    s.station_distances = r.doubles();
    s.static_values = r.strings();
    s.derived = r.doubles();
  }
  return set;
}

inline void save_sample_store(const std::string& path, const SampleSet& set) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write_sample_store(os, set);
  if (!os) throw DataError("failed writing " + path);
}

inline SampleSet load_sample_store(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open sample store: " + path);
  return read_sample_store(is);
}

inline nlohmann::json folds_to_json(const SampleSet& set, const std::vector<FoldSplit>& folds) {
  auto j = nlohmann::json::array();
  for (const auto& f : folds) {
    const auto span = [&](const std::vector<std::size_t>& idx) {
      return nlohmann::json{{"count", idx.size()},
                            {"first_date", set.samples[idx.front()].anchor.str()},
                            {"last_date", set.samples[idx.back()].anchor.str()},
                            {"indices", idx}};
    };
    j.push_back({{"fold", f.fold_index}, {"train", span(f.train)}, {"validation", span(f.validation)}, {"test", span(f.test)}});
  }
  return j;
}

inline std::vector<FoldSplit> folds_from_json(const nlohmann::json& j) {
  std::vector<FoldSplit> out;
  for (const auto& e : j) {
    FoldSplit f;
    f.fold_index = e.at("fold").get<std::size_t>();
    f.train = e.at("train").at("indices").get<std::vector<std::size_t>>();
    f.validation = e.at("validation").at("indices").get<std::vector<std::size_t>>();
    f.test = e.at("test").at("indices").get<std::vector<std::size_t>>();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace gentrap::data
