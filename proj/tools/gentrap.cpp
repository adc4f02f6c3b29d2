// gentrap: generate, preprocess, train, evaluate, compare, generalize.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 training divergence.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gentrap/cli/commands.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> jobs;
  bool dry_run = false;
};

gentrap::cli::RunConfig resolve(const Options& o, bool scenario_seed) {
  auto cfg = o.config.empty() ? gentrap::cli::RunConfig{} : gentrap::cli::load_run_config(o.config);
  if (o.seed) {
    if (scenario_seed)
      cfg.scenario.seed = *o.seed;
    else
      cfg.seed = *o.seed;
  }
  if (!o.out.empty()) cfg.paths.output_dir = o.out;
  if (o.jobs) cfg.experiment.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radio link failure prediction from link KPIs and nearby weather stations"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run config (schema_version 1)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "run seed (generate: scenario seed)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--jobs", o.jobs, "max concurrent training jobs")->check(CLI::PositiveNumber);
    sub->add_flag("--dry-run", o.dry_run, "validate the config and exit");
  };
  const std::vector<std::pair<std::string, std::string>> subcommands{
      {"generate", "write a synthetic scenario and its ground truth"},
      {"preprocess", "build the sample store and fold manifest"},
      {"train", "train model.architecture on experiment.fold"},
      {"evaluate", "score a trained checkpoint on the fold's test split"},
      {"compare", "train and test every architecture on every fold"},
      {"generalize", "train on link fractions, test on the full topology"}};
  for (const auto& [name, help] : subcommands) common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = resolve(o, cmd == "generate");
    if (o.dry_run) {
      std::cout << "config ok (" << cmd << ")\n" << nlohmann::json(cfg).dump(2) << "\n";
      return kOk;
    }
    using namespace gentrap::cli;
    if (cmd == "generate") cmd_generate(cfg, std::cout);
    else if (cmd == "preprocess") cmd_preprocess(cfg, std::cout);
    else if (cmd == "train") cmd_train(cfg, std::cout);
    else if (cmd == "evaluate") cmd_evaluate(cfg, std::cout);
    else if (cmd == "compare") cmd_compare(cfg, std::cout);
    else if (cmd == "generalize") cmd_generalize(cfg, std::cout);
    return kOk;
  } catch (const gentrap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const gentrap::TrainingDivergence& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}
