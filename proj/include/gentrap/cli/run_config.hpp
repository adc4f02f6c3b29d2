#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gentrap/dataset/pipeline.hpp"
#include "gentrap/error.hpp"
#include "gentrap/models/config.hpp"
#include "gentrap/synth/generator.hpp"
#include "gentrap/training/experiments.hpp"
#include "gentrap/training/trainer.hpp"

namespace gentrap::synth {

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = {{"seed", c.seed},
       {"n_sites", c.n_sites},
       {"links_per_site", c.links_per_site},
       {"n_stations", c.n_stations},
       {"n_days", c.n_days},
       {"start_date", c.start_date},
       {"target_failure_rate", c.target_failure_rate},
       {"max_k", c.max_k},
       {"variable_station_fraction", c.variable_station_fraction},
       {"precipitation_regional_weight", c.precipitation_regional_weight},
       {"temperature_mean", c.temperature_mean},
       {"temperature_regional_sd", c.temperature_regional_sd},
       {"temperature_local_sd", c.temperature_local_sd},
       {"causal_kind", c.causal_kind == CausalKind::step ? "step" : "logistic"},
       {"coupling", c.coupling},
       {"freeze_point", c.freeze_point},
       {"fade_db_per_mm", c.fade_db_per_mm},
       {"missing_fraction", c.missing_fraction},
       {"garbage_fraction", c.garbage_fraction}};
}

inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.n_sites = j.value("n_sites", c.n_sites);
  c.links_per_site = j.value("links_per_site", c.links_per_site);
  c.n_stations = j.value("n_stations", c.n_stations);
  c.n_days = j.value("n_days", c.n_days);
  c.start_date = j.value("start_date", c.start_date);
  c.target_failure_rate = j.value("target_failure_rate", c.target_failure_rate);
  c.max_k = j.value("max_k", c.max_k);
  c.variable_station_fraction = j.value("variable_station_fraction", c.variable_station_fraction);
  c.precipitation_regional_weight = j.value("precipitation_regional_weight", c.precipitation_regional_weight);
  c.temperature_mean = j.value("temperature_mean", c.temperature_mean);
  c.temperature_regional_sd = j.value("temperature_regional_sd", c.temperature_regional_sd);
  c.temperature_local_sd = j.value("temperature_local_sd", c.temperature_local_sd);
  const auto kind = j.value("causal_kind", std::string(c.causal_kind == CausalKind::step ? "step" : "logistic"));
  if (kind != "step" && kind != "logistic") throw ConfigError("scenario.causal_kind must be \"logistic\" or \"step\", got \"" + kind + "\"");
  c.causal_kind = kind == "step" ? CausalKind::step : CausalKind::logistic;
  c.coupling = j.value("coupling", c.coupling);
  c.freeze_point = j.value("freeze_point", c.freeze_point);
  c.fade_db_per_mm = j.value("fade_db_per_mm", c.fade_db_per_mm);
  c.missing_fraction = j.value("missing_fraction", c.missing_fraction);
  c.garbage_fraction = j.value("garbage_fraction", c.garbage_fraction);
}

}  // namespace gentrap::synth

namespace gentrap::data {

inline void to_json(nlohmann::json& j, const PreprocessOptions& o) {
  j = {{"drop_threshold", o.drop_threshold}, {"window", o.window}, {"max_k", o.max_k}, {"n_folds", o.n_folds}, {"derived_k", o.derived_k}};
}

inline void from_json(const nlohmann::json& j, PreprocessOptions& o) {
  o.drop_threshold = j.value("drop_threshold", o.drop_threshold);
  o.window = j.value("window", o.window);
  o.max_k = j.value("max_k", o.max_k);
  o.n_folds = j.value("n_folds", o.n_folds);
  o.derived_k = j.value("derived_k", o.derived_k);
}

}  // namespace gentrap::data

namespace gentrap::cli {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string> kAllArchitectures{"gentrap", "gen_lstmplus", "lstmplus", "gnn_lstmae", "lstmae"};

struct Paths {
  std::string data_dir;    // raw tables; empty = <output_dir>/data
  std::string output_dir = "out";
  std::string checkpoint;  // empty = <output_dir>/train/<architecture>/model.ckpt
};

struct ExperimentConfig {
  std::vector<std::string> architectures = kAllArchitectures;
  std::vector<std::size_t> folds{1, 2, 3, 4, 5};  // compare
  std::size_t fold = 1;                            // train, evaluate, generalize
  std::vector<std::string> generalize_architectures{"gentrap", "lstmplus"};
  std::vector<double> fractions = train::kDefaultFractions;
  std::uint64_t link_seed = 11;
  std::size_t jobs = 1;
};

/// Everything a command needs; one file reproduces a run.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;  // model initialisation and minibatch order
  Paths paths;
  synth::ScenarioConfig scenario;
  data::PreprocessOptions preprocess;
  models::ModelConfig model;
  train::TrainConfig train;
  ExperimentConfig experiment;

  std::filesystem::path output_dir() const { return paths.output_dir; }
  std::filesystem::path data_dir() const { return paths.data_dir.empty() ? output_dir() / "data" : std::filesystem::path(paths.data_dir); }
  std::filesystem::path prepared_dir() const { return output_dir() / "prepared"; }
  std::filesystem::path train_dir() const { return output_dir() / "train" / model.architecture; }
  std::filesystem::path checkpoint() const {
    return paths.checkpoint.empty() ? train_dir() / "model.ckpt" : std::filesystem::path(paths.checkpoint);
  }

  /// Model and trainer draw from the run seed.
  models::ModelConfig seeded_model() const {
    auto m = model;
    m.init_seed = seed;
    return m;
  }
  train::TrainConfig seeded_train() const {
    auto t = train;
    t.seed = seed;
    return t;
  }

  void validate() const {
    if (schema_version != kSchemaVersion)
      throw ConfigError("config schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                        std::to_string(kSchemaVersion) + ")");
    if (paths.output_dir.empty()) throw ConfigError("paths.output_dir must not be empty");
    model.validate();
    train.validate();
    const auto known = [](const std::string& a) {
      return std::find(kAllArchitectures.begin(), kAllArchitectures.end(), a) != kAllArchitectures.end();
    };
    for (const auto& a : experiment.architectures)
      if (!known(a)) throw ConfigError("experiment.architectures: unknown architecture \"" + a + "\"");
    for (const auto& a : experiment.generalize_architectures)
      if (!known(a)) throw ConfigError("experiment.generalize_architectures: unknown architecture \"" + a + "\"");
    for (const auto f : experiment.folds)
      if (f == 0 || f > preprocess.n_folds) throw ConfigError("experiment.folds: fold " + std::to_string(f) + " outside 1.." + std::to_string(preprocess.n_folds));
    if (experiment.fold == 0 || experiment.fold > preprocess.n_folds)
      throw ConfigError("experiment.fold " + std::to_string(experiment.fold) + " outside 1.." + std::to_string(preprocess.n_folds));
    for (const double f : experiment.fractions)
      if (!(f > 0 && f <= 1)) throw ConfigError("experiment.fractions: " + std::to_string(f) + " outside (0, 1]");
    if (experiment.jobs == 0) throw ConfigError("experiment.jobs must be positive");
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"schema_version", c.schema_version},
       {"seed", c.seed},
       {"paths", {{"data_dir", c.paths.data_dir}, {"output_dir", c.paths.output_dir}, {"checkpoint", c.paths.checkpoint}}},
       {"scenario", c.scenario},
       {"preprocess", c.preprocess},
       {"model", c.model},
       {"train", c.train},
       {"experiment",
        {{"architectures", c.experiment.architectures},
         {"folds", c.experiment.folds},
         {"fold", c.experiment.fold},
         {"generalize_architectures", c.experiment.generalize_architectures},
         {"fractions", c.experiment.fractions},
         {"link_seed", c.experiment.link_seed},
         {"jobs", c.experiment.jobs}}}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("schema_version")) throw ConfigError("config is missing schema_version");
  c.schema_version = j.at("schema_version").get<int>();
  c.seed = j.value("seed", c.seed);
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    c.paths.data_dir = p.value("data_dir", c.paths.data_dir);
    c.paths.output_dir = p.value("output_dir", c.paths.output_dir);
    c.paths.checkpoint = p.value("checkpoint", c.paths.checkpoint);
  }
  if (j.contains("scenario")) c.scenario = j.at("scenario").get<synth::ScenarioConfig>();
  if (j.contains("preprocess")) c.preprocess = j.at("preprocess").get<data::PreprocessOptions>();
  if (j.contains("model")) c.model = j.at("model").get<models::ModelConfig>();
  if (j.contains("train")) c.train = j.at("train").get<train::TrainConfig>();
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    auto& x = c.experiment;
    x.architectures = e.value("architectures", x.architectures);
    x.folds = e.value("folds", x.folds);
    x.fold = e.value("fold", x.fold);
    x.generalize_architectures = e.value("generalize_architectures", x.generalize_architectures);
    x.fractions = e.value("fractions", x.fractions);
    x.link_seed = e.value("link_seed", x.link_seed);
    x.jobs = e.value("jobs", x.jobs);
  }
}

inline RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text).get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

}  // namespace gentrap::cli
