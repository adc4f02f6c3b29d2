// Acceptance runner. One PASS/FAIL line per criterion.
//
//   acceptance properties   criteria 1, 2, 3, 4, 8 (property suites, linked in)
//   acceptance comparison   criterion 5
//   acceptance fractions    criterion 6
//   acceptance autoencoders criterion 7
//
// The experiment modes train on the default synthetic scenario, fold 1, with
// training seeds 1, 2, 3 and report the median macro-F1 over seeds.

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "gentrap/dataset/pipeline.hpp"
#include "gentrap/synth/generator.hpp"
#include "gentrap/synth/oracle.hpp"
#include "gentrap/training/experiments.hpp"

using namespace gentrap;

namespace {

constexpr double kCeilingShare = 0.80;
constexpr double kMinGap = 0.02;
constexpr double kComparisonBudgetSeconds = 30 * 60;
constexpr double kGradBudgetSeconds = 5 * 60;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};
constexpr std::size_t kFold = 1;

int verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return pass ? 0 : 1;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------------------
// Property suites

struct Tally {
  std::size_t passed = 0, failed = 0;
  double seconds = 0;
};

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

/// Criteria a test counts toward, by suite and test name.
std::vector<int> criteria_of(const std::string& suite, const std::string& name) {
  std::vector<int> out;
  const auto full = suite + "." + name;
  if (name.find("Gradient") != std::string::npos || suite == "ElementwiseOps" || suite == "GradCheck") out.push_back(1);
  if (suite == "WeightedCrossEntropy") out.push_back(2);
  if (suite == "Aggregation" || suite == "ElementwiseMax") out.push_back(3);
  if (suite == "Loading" || suite == "Align" || suite == "Drop" || suite == "Interpolate" || suite == "BuildSamples" || suite == "Folds" ||
      suite == "Store" || starts_with(full, "Generate.SameSeed") || starts_with(full, "Generate.HourlyAlignment") ||
      starts_with(full, "Generate.Preprocessing") || starts_with(full, "Generate.PassesPreprocessing"))
    out.push_back(4);
  if (suite == "Metrics") out.push_back(8);
  return out;
}

class CriterionListener : public ::testing::EmptyTestEventListener {
 public:
  std::map<int, Tally> tallies;
  void OnTestEnd(const ::testing::TestInfo& info) override {
    const bool ok = info.result()->Passed();
    for (const int c : criteria_of(info.test_suite_name(), info.name())) {
      auto& t = tallies[c];
      (ok ? t.passed : t.failed) += 1;
      t.seconds += static_cast<double>(info.result()->elapsed_time()) / 1000.0;
    }
  }
};

int run_properties(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  auto* listener = new CriterionListener;
  ::testing::UnitTest::GetInstance()->listeners().Append(listener);
  const int gtest_status = RUN_ALL_TESTS();
  int failures = 0;
  const std::map<int, std::string> names{
      {1, "gradient suite"}, {2, "weighted cross-entropy suite"}, {3, "aggregation suite"}, {4, "pipeline suite"}, {8, "metrics suite"}};
  for (const auto& [c, label] : names) {
    const auto t = listener->tallies[c];
    bool pass = t.failed == 0 && t.passed > 0;
    std::string detail = label + ": " + std::to_string(t.passed) + " passed, " + std::to_string(t.failed) + " failed";
    if (c == 1) {
      pass = pass && t.seconds < kGradBudgetSeconds;
      detail += ", " + std::to_string(static_cast<int>(t.seconds + 0.5)) + " s (budget " + std::to_string(static_cast<int>(kGradBudgetSeconds)) + " s)";
    }
    failures += verdict(c, pass, detail);
  }
  return failures == 0 && gtest_status == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Experiments

struct Setting {
  synth::Scenario scenario;
  data::PreparedData prepared;
  const data::FoldSplit* fold = nullptr;
  double oracle_f1 = 0;
};

Setting default_setting() {
  Setting s{synth::generate({}), {}, nullptr, 0};
  s.prepared = data::run_preprocessing(s.scenario.tables());
  s.fold = &s.prepared.folds.at(kFold - 1);
  s.oracle_f1 = synth::oracle_best_possible(s.scenario.truth, s.prepared.samples, s.fold->test, kFold).macro.f1;
  std::printf("scenario: %zu samples, %zu failures, fold %zu test %zu samples, oracle macro-F1 %s\n", s.prepared.samples.samples.size(),
              s.scenario.truth.failures.size(), kFold, s.fold->test.size(), num(s.oracle_f1).c_str());
  return s;
}

train::TrainConfig acceptance_training(std::uint64_t seed) {
  train::TrainConfig c;
  c.seed = seed;
  c.epochs = 60;
  c.patience = 10;
  c.learning_rate = 1e-3;
  c.batch_size = 128;
  c.majority_fraction = 0.125;
  return c;
}

models::ModelConfig acceptance_model(std::uint64_t seed) {
  models::ModelConfig m;
  m.init_seed = seed;
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Median test macro-F1 per architecture over the seeds.
std::map<std::string, double> median_f1(const Setting& s, const std::vector<std::string>& architectures) {
  std::map<std::string, std::vector<double>> f1;
  for (const auto seed : kSeeds)
    for (const auto& a : architectures) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = train::run_job(a, s.prepared.samples, *s.fold, acceptance_model(seed), acceptance_training(seed));
      f1[a].push_back(r.test.macro.f1);
      std::printf("  seed %llu %-13s test macro-F1 %s  best epoch %zu  %.0f s\n", static_cast<unsigned long long>(seed), a.c_str(),
                  num(r.test.macro.f1).c_str(), r.training.best_epoch, seconds_since(t0));
      std::fflush(stdout);
    }
  std::map<std::string, double> out;
  for (const auto& [a, v] : f1) out[a] = median(v);
  return out;
}

int run_comparison() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = default_setting();
  const auto m = median_f1(s, {"gentrap", "gen_lstmplus", "lstmplus"});
  const double elapsed = seconds_since(t0);
  const double g = m.at("gentrap"), gl = m.at("gen_lstmplus"), l = m.at("lstmplus");
  const bool ceiling = g >= kCeilingShare * s.oracle_f1;
  const bool order = g - gl >= kMinGap && gl - l >= kMinGap;
  const bool budget = elapsed < kComparisonBudgetSeconds;
  std::printf("  median macro-F1: gentrap %s, gen_lstmplus %s, lstmplus %s; oracle %s\n", num(g).c_str(), num(gl).c_str(), num(l).c_str(),
              num(s.oracle_f1).c_str());
  std::printf("  ceiling share %s (need >= %s): %s\n", num(g / s.oracle_f1).c_str(), num(kCeilingShare).c_str(), ceiling ? "ok" : "short");
  std::printf("  gaps gentrap-gen_lstmplus %s, gen_lstmplus-lstmplus %s (need >= %s each): %s\n", num(g - gl).c_str(), num(gl - l).c_str(),
              num(kMinGap).c_str(), order ? "ok" : "violated");
  std::printf("  runtime %.0f s (budget %.0f s): %s\n", elapsed, kComparisonBudgetSeconds, budget ? "ok" : "over");
  return verdict(5, ceiling && order && budget,
                 "gentrap/oracle " + num(g / s.oracle_f1) + ", gaps " + num(g - gl) + " / " + num(gl - l) + ", " + std::to_string(static_cast<int>(elapsed)) + " s");
}

int run_fractions() {
  const auto s = default_setting();
  const auto order = train::link_order(s.prepared.samples, 11);
  bool pass = true;
  std::string detail;
  for (const double f : train::kDefaultFractions) {
    const auto split = train::restrict_training(s.prepared.samples, *s.fold, train::link_fraction(order, f), f);
    std::vector<double> g, l;
    for (const auto seed : kSeeds) {
      g.push_back(train::run_job("gentrap", s.prepared.samples, split, acceptance_model(seed), acceptance_training(seed)).test.macro.f1);
      l.push_back(train::run_job("lstmplus", s.prepared.samples, split, acceptance_model(seed), acceptance_training(seed)).test.macro.f1);
      std::printf("  fraction %s seed %llu gentrap %s lstmplus %s\n", num(f).c_str(), static_cast<unsigned long long>(seed),
                  num(g.back()).c_str(), num(l.back()).c_str());
      std::fflush(stdout);
    }
    const double mg = median(g), ml = median(l);
    pass = pass && mg >= ml;
    if (!detail.empty()) detail += "; ";
    detail += num(f) + ": " + num(mg) + (mg >= ml ? " >= " : " < ") + num(ml);
  }
  return verdict(6, pass, detail);
}

int run_autoencoders() {
  const auto s = default_setting();
  const auto m = median_f1(s, {"gnn_lstmae", "lstmae"});
  const double g = m.at("gnn_lstmae"), l = m.at("lstmae");
  return verdict(7, g >= l, "median macro-F1 gnn_lstmae " + num(g) + (g >= l ? " >= " : " < ") + "lstmae " + num(l));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  if (mode == "properties") return run_properties(argc - 1, argv + 1);
  if (mode == "comparison") return run_comparison();
  if (mode == "fractions") return run_fractions();
  if (mode == "autoencoders") return run_autoencoders();
  std::fprintf(stderr, "usage: acceptance properties|comparison|fractions|autoencoders\n");
  return 2;
}
