#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gentrap/cli/run_config.hpp"
#include "gentrap/dataset/pipeline.hpp"
#include "gentrap/dataset/store.hpp"
#include "gentrap/dataset/tables.hpp"
#include "gentrap/models/architectures.hpp"
#include "gentrap/numerics/checkpoint.hpp"
#include "gentrap/synth/generator.hpp"
#include "gentrap/training/experiments.hpp"
#include "gentrap/training/trainer.hpp"

namespace gentrap::cli {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("failed writing " + path.string());
}

/// 64-bit FNV-1a.
inline std::uint64_t content_hash(std::string_view bytes, std::uint64_t h = 14695981039346656037ull) {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Copies the effective config into the output dir.
inline void record_config(const RunConfig& cfg) { write_file(cfg.output_dir() / "config.json", nlohmann::json(cfg).dump(2) + "\n"); }

// ---------------------------------------------------------------------------

inline synth::Scenario cmd_generate(const RunConfig& cfg, std::ostream& log) {
  const auto sc = synth::generate(cfg.scenario);
  sc.write(cfg.data_dir());
  record_config(cfg);
  log << "wrote " << sc.files.size() << " files to " << cfg.data_dir().string() << "\n";
  for (const auto& [name, text] : sc.files) log << "  " << hex(content_hash(text)) << "  " << name << "\n";
  log << "realized failure rate " << sc.truth.realized_rate() << " (" << sc.truth.failures.size() << " failures over "
      << sc.truth.link_days << " link-days, target " << cfg.scenario.target_failure_rate << ")\n";
  return sc;
}

struct Prepared {
  data::SampleSet samples;
  std::vector<data::FoldSplit> folds;
};

inline std::string input_fingerprint(const RunConfig& cfg) {
  const auto paths = data::TablePaths::in_directory(cfg.data_dir());
  std::uint64_t h = content_hash(nlohmann::json(cfg.preprocess).dump());
  for (const auto& p : {paths.sites, paths.kpis, paths.stations, paths.weather, paths.forecast, paths.distances}) {
    h = content_hash(p.filename().string(), h);
    h = content_hash(read_file(p), h);
  }
  return hex(h);
}

/// Returns false when the stored samples already match the inputs.
inline bool cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
  const auto dir = cfg.prepared_dir();
  const auto fingerprint = input_fingerprint(cfg);
  if (fs::exists(dir / "input.hash") && fs::exists(dir / "samples.store") && fs::exists(dir / "folds.json") &&
      read_file(dir / "input.hash") == fingerprint) {
    log << "inputs unchanged (" << fingerprint << "); " << dir.string() << " is up to date\n";
    return false;
  }
  const auto raw = data::load_tables(data::TablePaths::in_directory(cfg.data_dir()));
  const auto prep = data::run_preprocessing(raw, cfg.preprocess);
  if (prep.report.leakage_violations != 0)
    throw DataError("fold manifest failed the no-leakage check (" + std::to_string(prep.report.leakage_violations) + " violations)");
  fs::create_directories(dir);
  data::save_sample_store((dir / "samples.store").string(), prep.samples);
  write_file(dir / "folds.json", data::folds_to_json(prep.samples, prep.folds).dump() + "\n");
  const auto report = data::to_json(prep.report);
  write_file(dir / "report.json", report.dump(2) + "\n");
  write_file(dir / "input.hash", fingerprint);
  record_config(cfg);
  log << report.dump(2) << "\n";
  return true;
}

inline Prepared load_prepared(const RunConfig& cfg) {
  const auto dir = cfg.prepared_dir();
  if (!fs::exists(dir / "samples.store") || !fs::exists(dir / "folds.json"))
    throw DataError("no preprocessed store in " + dir.string() + "; run the preprocess command first");
  Prepared p{data::load_sample_store((dir / "samples.store").string()), data::folds_from_json(nlohmann::json::parse(read_file(dir / "folds.json")))};
  return p;
}

inline const data::FoldSplit& pick_fold(const Prepared& p, std::size_t fold) {
  for (const auto& f : p.folds)
    if (f.fold_index == fold) return f;
  throw ConfigError("fold " + std::to_string(fold) + " is not in the fold manifest");
}

inline void print_epoch(std::ostream& log, const train::EpochTrace& e) {
  log << "epoch " << e.epoch << " loss " << e.loss << " val P " << e.validation.precision << " R " << e.validation.recall << " F1 "
      << e.validation.f1 << " (" << e.seconds << " s)\n";
  log.flush();
}

/// Trains `model.architecture` on the configured fold; writes the checkpoint,
/// the fitted encoder and the epoch trace next to it.
inline train::TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  const auto& fold = pick_fold(prepared, cfg.experiment.fold);
  const auto enc = models::FeatureEncoder::fit(prepared.samples, fold.train);
  const auto model_cfg = cfg.seeded_model();
  auto model = models::make_model<float>(model_cfg, enc.dims);
  const auto result = train::train(*model, prepared.samples, fold, enc, cfg.seeded_train(), [&](const train::EpochTrace& e) { print_epoch(log, e); });

  const auto ckpt = cfg.checkpoint();
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  nx::save_checkpoint(ckpt.string(), model->parameters());
  nlohmann::json meta{{"model", model_cfg},
                      {"encoder", enc.to_json()},
                      {"fold", fold.fold_index},
                      {"lambda", result.lambda},
                      {"best_epoch", result.best_epoch},
                      {"best_validation_f1", result.best_validation_f1}};
  if (result.threshold) meta["threshold"] = result.threshold->threshold;
  write_file(fs::path(ckpt.string() + ".json"), meta.dump(2) + "\n");
  write_file(cfg.train_dir() / "trace.csv", train::trace_csv(result));
  record_config(cfg);
  log << "best epoch " << result.best_epoch << " validation macro-F1 " << result.best_validation_f1 << "; checkpoint " << ckpt.string() << "\n";
  return result;
}

/// Scores the stored checkpoint on the configured fold's test split.
inline train::MetricsReport cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const auto ckpt = cfg.checkpoint();
  const fs::path meta_path = ckpt.string() + ".json";
  if (!fs::exists(ckpt) || !fs::exists(meta_path))
    throw DataError("no checkpoint at " + ckpt.string() + " (with " + meta_path.filename().string() + "); run the train command first");
  const auto meta = nlohmann::json::parse(read_file(meta_path));
  const auto model_cfg = meta.at("model").get<models::ModelConfig>();
  const auto enc = models::FeatureEncoder::from_json(meta.at("encoder"));
  auto model = models::make_model<float>(model_cfg, enc.dims);
  nx::load_checkpoint(ckpt.string(), model->parameters());
  std::optional<double> threshold;
  if (meta.contains("threshold")) threshold = meta.at("threshold").get<double>();

  const auto prepared = load_prepared(cfg);
  const auto& fold = pick_fold(prepared, cfg.experiment.fold);
  auto report = train::evaluate(*model, prepared.samples, fold.test, enc, threshold, fold.fold_index, cfg.train.eval_batch_size);
  report.model = model_cfg.architecture;
  const auto dir = cfg.output_dir() / "evaluate" / model_cfg.architecture;
  const auto j = train::to_json(report);
  write_file(dir / "report.json", j.dump(2) + "\n");
  std::ostringstream table;
  table << "model " << report.model << " fold " << report.fold << "\n"
        << "class    P       R       F1\n"
        << "failure  " << train::detail::fmt(report.failure.precision) << "  " << train::detail::fmt(report.failure.recall) << "  "
        << train::detail::fmt(report.failure.f1) << "\n"
        << "normal   " << train::detail::fmt(report.normal.precision) << "  " << train::detail::fmt(report.normal.recall) << "  "
        << train::detail::fmt(report.normal.f1) << "\n"
        << "macro    " << train::detail::fmt(report.macro.precision) << "  " << train::detail::fmt(report.macro.recall) << "  "
        << train::detail::fmt(report.macro.f1) << "\n";
  write_file(dir / "report.txt", table.str());
  record_config(cfg);
  log << table.str();
  return report;
}

inline void write_traces(const fs::path& dir, const std::vector<train::JobResult>& cells, const std::string& tag) {
  for (const auto& c : cells) write_file(dir / (c.model + "_" + tag + std::to_string(c.fold) + ".csv"), train::trace_csv(c.training));
}

inline train::ComparisonReport cmd_compare(const RunConfig& cfg, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  std::vector<data::FoldSplit> folds;
  for (const auto f : cfg.experiment.folds) folds.push_back(pick_fold(prepared, f));
  const auto report = train::run_comparison(cfg.experiment.architectures, prepared.samples, folds, cfg.seeded_model(), cfg.seeded_train(),
                                            cfg.experiment.jobs);
  const auto dir = cfg.output_dir() / "compare";
  write_file(dir / "report.json", train::to_json(report).dump(2) + "\n");
  const auto table = train::render_table(report);
  write_file(dir / "report.txt", table);
  write_traces(dir / "traces", report.cells, "fold");
  record_config(cfg);
  log << table;
  return report;
}

inline train::GeneralizationReport cmd_generalize(const RunConfig& cfg, std::ostream& log) {
  const auto prepared = load_prepared(cfg);
  const auto report = train::run_generalization(cfg.experiment.generalize_architectures, prepared.samples,
                                                pick_fold(prepared, cfg.experiment.fold), cfg.experiment.fractions, cfg.seeded_model(),
                                                cfg.seeded_train(), cfg.experiment.link_seed, cfg.experiment.jobs);
  const auto dir = cfg.output_dir() / "generalize";
  write_file(dir / "report.json", train::to_json(report).dump(2) + "\n");
  const auto table = train::render_table(report);
  write_file(dir / "report.txt", table);
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& c = report.cells[i];
    const auto fraction = report.fractions[i / report.models.size()];
    write_file(dir / "traces" / (c.model + "_fraction" + train::detail::fmt(fraction) + ".csv"), train::trace_csv(c.training));
  }
  record_config(cfg);
  log << table;
  return report;
}

}  // namespace gentrap::cli
