#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "gentrap/numerics/parameters.hpp"

namespace gentrap::nx {

// Text checkpoint layout:
//
//   gentrap-checkpoint 1
//   scalar <float|double>
//   entries <n>
//   <name> <trainable 0|1> <rank> <d0> ... <d{rank-1}>
//   <row-major values, space separated, shortest exact decimal>
//   ... repeated n times
//
// Values are printed with max_digits10 so a write/read cycle is exact at
// the stored precision.

inline constexpr int kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  bool trainable = true;
  Shape shape;
  std::vector<double> values;
};

template <class T>
void write_checkpoint(std::ostream& os, const ParameterSet<T>& params) {
  os << "gentrap-checkpoint " << kCheckpointVersion << '\n';
  os << "scalar " << (std::is_same_v<T, float> ? "float" : "double") << '\n';
  os << "entries " << params.entries().size() << '\n';
  char buf[64];
  const char* fmt = std::is_same_v<T, float> ? "%.9g" : "%.17g";
  for (const auto& e : params.entries()) {
    os << e.name << ' ' << (e.trainable ? 1 : 0) << ' ' << e.tensor.rank();
    for (auto d : e.tensor.shape()) os << ' ' << d;
    os << '\n';
    bool first = true;
    for (T v : e.tensor.values()) {
      std::snprintf(buf, sizeof buf, fmt, static_cast<double>(v));
      if (!first) os << ' ';
      os << buf;
      first = false;
    }
    os << '\n';
  }
}

inline std::vector<CheckpointEntry> read_checkpoint_entries(std::istream& is) {
  std::string magic, key;
  int version = 0;
  if (!(is >> magic >> version) || magic != "gentrap-checkpoint")
    throw SchemaError("checkpoint: missing 'gentrap-checkpoint' header");
  if (version != kCheckpointVersion) throw SchemaError("checkpoint: unsupported version " + std::to_string(version));
  std::string scalar;
  std::size_t count = 0;
  if (!(is >> key >> scalar) || key != "scalar") throw SchemaError("checkpoint: missing scalar line");
  if (!(is >> key >> count) || key != "entries") throw SchemaError("checkpoint: missing entries line");
  std::vector<CheckpointEntry> out(count);
  for (auto& e : out) {
    int trainable = 1;
    std::size_t rank = 0;
    if (!(is >> e.name >> trainable >> rank)) throw SchemaError("checkpoint: truncated entry header");
    e.trainable = trainable != 0;
    e.shape.resize(rank);
    for (auto& d : e.shape)
      if (!(is >> d)) throw SchemaError("checkpoint: truncated shape for " + e.name);
    e.values.resize(element_count(e.shape));
    std::string token;
    for (auto& v : e.values) {
      if (!(is >> token)) throw SchemaError("checkpoint: truncated values for " + e.name);
      const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
      if (res.ec != std::errc{}) throw SchemaError("checkpoint: bad value '" + token + "' in " + e.name);
    }
  }
  return out;
}

/// Loads values into an existing parameter set; names and shapes must match.
template <class T>
void read_checkpoint(std::istream& is, ParameterSet<T>& params) {
  const auto entries = read_checkpoint_entries(is);
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  for (auto& p : params.entries()) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw SchemaError("checkpoint: missing parameter " + p.name);
    if (it->second->shape != p.tensor.shape())
      throw SchemaError("checkpoint: shape mismatch for " + p.name + ": " + shape_string(it->second->shape) + " vs " +
                        shape_string(p.tensor.shape()));
    auto dst = p.tensor.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(it->second->values[i]);
  }
  if (by_name.size() != params.entries().size()) throw SchemaError("checkpoint: parameter count mismatch");
}

template <class T>
void save_checkpoint(const std::string& path, const ParameterSet<T>& params) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  write_checkpoint(os, params);
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

template <class T>
void load_checkpoint(const std::string& path, ParameterSet<T>& params) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  read_checkpoint(is, params);
}

}  // namespace gentrap::nx
