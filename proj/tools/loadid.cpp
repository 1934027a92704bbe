// Command-line front end: loadid generate|train|filter|evaluate|compare.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "loadid/error.hpp"
#include "loadid/experiment.hpp"
#include "loadid/io.hpp"
#include "loadid/parallel.hpp"
#include "loadid/pipeline.hpp"

namespace {

using namespace loadid;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config;
  std::string preset;
  long long seed = -1;
  std::string out;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "built-in preset layered under the config")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_flag("--dry-run", o.dry_run, "validate the configuration, print it and exit");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg;
  if (!o.preset.empty()) cfg = preset_config(o.preset);
  if (!o.config.empty()) cfg = apply_config(io::read_text(o.config), cfg);
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.validate();
  return cfg;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Divergence:
    case ErrorKind::TrainingDivergence:
    case ErrorKind::IllConditioned:
    case ErrorKind::SensitivityFailure:
    case ErrorKind::RegularizationRequired:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

std::vector<nets::CellKind> cells_of(const std::string& cell) {
  if (cell == "all") return {kAllCells.begin(), kAllCells.end()};
  return {nets::cell_kind_from_string(cell)};
}

void print_table(const SummaryTable& t) { std::cout << t.to_csv(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loadid: dynamic load identification workbench (Kalman filter vs. sequence networks)"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string cell = "all";
  std::string predictions;

  auto* gen = app.add_subcommand("generate", "simulate the dataset: per-sequence CSVs plus dataset.json");
  auto* trn = app.add_subcommand("train", "train networks on the dataset; writes model files and loss curves");
  auto* flt = app.add_subcommand("filter", "run the Kalman filter on every test sequence; writes trace CSVs");
  auto* evl = app.add_subcommand("evaluate", "score predictions against the truth; writes E(t) curves and summary.csv");
  auto* cmp = app.add_subcommand("compare", "generate, train x3, filter and evaluate with a run manifest");
  for (auto* c : {gen, trn, flt, evl, cmp}) add_common(c, opts);
  trn->add_option("--cell", cell, "network kind")->check(CLI::IsMember({"lstm", "gru", "conv", "all"}));
  evl->add_option("--predictions", predictions, "directory with one sub-directory of CSVs per method");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const ExperimentConfig cfg = resolve(opts);
    if (opts.dry_run) {
      std::cout << config_json(cfg);
      std::cerr << "loadid: configuration is valid (dry run, nothing computed)\n";
      return kExitOk;
    }
    const unsigned threads = default_threads();
    const pipeline::Layout layout{cfg.out_dir};
    std::map<std::string, double> timings;
    std::vector<std::string> files;
    auto collect = [&](const std::string& stage, const pipeline::StageResult& r) {
      files.insert(files.end(), r.files.begin(), r.files.end());
      timings[stage] = r.seconds;
    };
    std::string command;

    if (gen->parsed()) {
      command = "generate";
      collect("generate", pipeline::generate(cfg, layout, threads));
    } else if (trn->parsed()) {
      command = "train";
      for (auto kind : cells_of(cell)) {
        const auto& n = cfg.network(kind);
        std::cerr << "loadid: train " << nets::to_string(kind) << " units=" << n.units
                  << " layer_pairs=" << n.layer_pairs << " dropout=" << n.effective_dropout()
                  << " max_epochs=" << n.max_epochs << " lr=" << n.learning_rate << "\n";
        const auto r = pipeline::train(cfg, layout, kind);
        collect("train_" + nets::to_string(kind), r);
        std::cerr << "loadid: trained " << nets::to_string(kind) << " in " << r.seconds << " s\n";
      }
    } else if (flt->parsed()) {
      command = "filter";
      collect("filter", pipeline::filter(cfg, layout, threads));
    } else if (evl->parsed()) {
      command = "evaluate";
      auto ev = pipeline::evaluate(cfg, layout, predictions.empty() ? layout.predictions() : predictions);
      collect("evaluate", ev.stage);
      print_table(ev.table);
    } else {
      const auto cmpres = pipeline::compare(cfg, threads);
      for (const auto& [nsr, table] : cmpres.levels) {
        if (cmpres.levels.size() > 1) std::cout << "# nsr " << nsr << "\n";
        print_table(table);
      }
      std::cerr << "loadid: wrote " << cmpres.files.size() << " files under " << cfg.out_dir << "\n";
      return kExitOk;
    }
    pipeline::write_manifest(cfg, cfg.out_dir, files, command, timings);
    std::cerr << "loadid: " << command << " wrote " << files.size() << " files under " << cfg.out_dir << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "loadid: error (" << to_string(e.kind()) << "): " << e.message() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "loadid: error: " << e.what() << "\n";
    return kExitUsage;
  }
}
