#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "gentrap/dataset/samples.hpp"

namespace gentrap::data {

struct FoldSplit {
  std::size_t fold_index = 1;  // 1-based
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Rolling-origin folds over the time-sorted samples. Fold 1 takes the
/// first 70% of the timeline for training, the next 20% for validation and
/// the last 10% for testing; each later fold moves all three boundaries 10%
/// earlier. Boundaries fall between distinct anchor dates, so no date is
/// shared between sets.
inline std::vector<FoldSplit> rolling_origin_folds(const SampleSet& set, std::size_t n_folds = 5) {
  if (n_folds == 0 || n_folds > 7) throw ConfigError("rolling_origin_folds: n_folds must be in [1, 7]");
  if (set.samples.size() < n_folds * 10)
    throw ConfigError("rolling_origin_folds: " + std::to_string(set.samples.size()) + " samples is fewer than folds x 10");
  std::vector<Date> dates;
  for (const auto& s : set.samples) dates.push_back(s.anchor);
  if (!std::is_sorted(dates.begin(), dates.end())) throw PreconditionError("rolling_origin_folds: samples must be sorted by anchor date");
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  const std::size_t n_dates = dates.size();
  if (n_dates < 10) throw ConfigError("rolling_origin_folds: need at least 10 distinct anchor dates");

  // tenths of the timeline -> index of the first date past that boundary
  const auto cut = [&](std::size_t tenths) { return (n_dates * tenths + 5) / 10; };
  std::vector<FoldSplit> folds;
  for (std::size_t i = 0; i < n_folds; ++i) {
    const std::size_t end = cut(10 - i), train_end = cut(7 - i), val_end = cut(9 - i);
    FoldSplit f;
    f.fold_index = i + 1;
    for (std::size_t s = 0; s < set.samples.size(); ++s) {
      const auto pos = static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), set.samples[s].anchor) - dates.begin());
      if (pos < train_end)
        f.train.push_back(s);
      else if (pos < val_end)
        f.validation.push_back(s);
      else if (pos < end)
        f.test.push_back(s);
    }
    if (f.train.empty() || f.validation.empty() || f.test.empty())
      throw ConfigError("rolling_origin_folds: fold " + std::to_string(i + 1) + " has an empty partition");
    folds.push_back(std::move(f));
  }
  return folds;
}

/// True when the three partitions are disjoint and strictly ordered in time.
inline bool fold_is_time_ordered(const SampleSet& set, const FoldSplit& f) {
  const auto range = [&](const std::vector<std::size_t>& idx) {
    Date lo{INT32_MAX}, hi{INT32_MIN};
    for (auto i : idx) {
      lo = std::min(lo, set.samples[i].anchor);
      hi = std::max(hi, set.samples[i].anchor);
    }
    return std::pair{lo, hi};
  };
  const auto [tr_lo, tr_hi] = range(f.train);
  const auto [va_lo, va_hi] = range(f.validation);
  const auto [te_lo, te_hi] = range(f.test);
  std::set<std::size_t> seen;
  for (const auto* part : {&f.train, &f.validation, &f.test})
    for (auto i : *part)
      if (!seen.insert(i).second) return false;
  return tr_hi < va_lo && va_hi < te_lo;
}

}  // namespace gentrap::data
