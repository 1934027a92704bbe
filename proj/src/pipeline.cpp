#include "loadid/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>

#include "json.hpp"
#include "loadid/error.hpp"
#include "loadid/io.hpp"
#include "loadid/parallel.hpp"
#include "loadid/rng.hpp"

namespace loadid::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::string& a, const std::string& b) { return (fs::path(a) / b).string(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename Fn>
auto labelled(const std::string& label, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), "[" + label + "] " + e.message());
  }
}

std::vector<std::size_t> resolve_targets(const ExperimentConfig& cfg, const io::DatasetInfo& info) {
  return info.target_dofs.empty() ? cfg.target_dofs() : info.target_dofs;
}

Eigen::MatrixXd target_columns(const Eigen::MatrixXd& values, const std::vector<std::size_t>& dofs) {
  Eigen::MatrixXd out(values.rows(), static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t j = 0; j < dofs.size(); ++j) {
    const auto d = static_cast<Eigen::Index>(dofs[j]);
    if (d >= values.cols()) throw Error(ErrorKind::InvalidDof, "target DOF " + std::to_string(dofs[j] + 1) + " out of range");
    out.col(static_cast<Eigen::Index>(j)) = values.col(d);
  }
  return out;
}

std::string level_name(double nsr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "nsr_%.2f", nsr);
  return buf;
}

}  // namespace

std::string Layout::dataset() const { return join(root, "dataset"); }
std::string Layout::models() const { return join(root, "models"); }
std::string Layout::traces() const { return join(root, "traces"); }
std::string Layout::predictions() const { return join(root, "predictions"); }
std::string Layout::predictions(const std::string& method) const { return join(predictions(), method); }
std::string Layout::evaluation() const { return join(root, "evaluation"); }
std::string Layout::summary() const { return join(root, "summary.csv"); }
std::string Layout::manifest() const { return join(root, "manifest.json"); }

StageResult generate(const ExperimentConfig& cfg, const Layout& layout, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const Dataset ds = build_dataset(cfg.scenario, cfg.count, cfg.split, cfg.seed, threads);
  io::DatasetInfo info;
  info.scenario = to_string(cfg.scenario.kind);
  info.n_stories = cfg.scenario.building.n_stories();
  info.dt = cfg.scenario.dt;
  info.duration = cfg.scenario.duration;
  info.nsr = cfg.scenario.nsr;
  info.seed = cfg.seed;
  info.measured_dofs = cfg.scenario.measured_dofs;
  info.target_dofs = cfg.target_dofs();
  StageResult r;
  r.files = io::write_dataset(ds, info, layout.dataset());
  r.seconds = seconds_since(t0);
  return r;
}

StageResult train(const ExperimentConfig& cfg, const Layout& layout, nets::CellKind kind) {
  const auto t0 = std::chrono::steady_clock::now();
  io::DatasetInfo info;
  const Dataset ds = io::read_dataset(layout.dataset(), &info);
  const std::vector<std::size_t> targets = resolve_targets(cfg, info);
  nets::NetworkConfig ncfg = cfg.network(kind);
  ncfg.cell = kind;
  ncfg.seed = substream_seed(cfg.seed, "network", static_cast<std::uint64_t>(kind));

  auto [model, report] = nets::train(ncfg, ds, targets);
  const std::string name = nets::to_string(kind);
  StageResult r;
  const std::string model_path = join(layout.models(), name + ".bin");
  fs::create_directories(layout.models());
  nets::save_model(model, model_path);
  r.files.push_back(model_path);
  const std::string loss_path = join(layout.models(), name + "_loss.csv");
  io::write_text(loss_path, nets::loss_curve_csv(report));
  r.files.push_back(loss_path);

  for (std::size_t idx : ds.split.test) {
    const Sequence& s = ds.sequences[idx];
    const Eigen::MatrixXd pred = nets::predict_load(model, nets::sequence_input(s)).transpose();
    const std::string path = join(layout.predictions(name), info.ids[idx] + ".csv");
    io::write_text(path, io::prediction_csv(s.measurements.time, pred, targets));
    r.files.push_back(path);
  }
  r.seconds = seconds_since(t0);
  return r;
}

StageResult filter(const ExperimentConfig& cfg, const Layout& layout, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  io::DatasetInfo info;
  const Dataset ds = io::read_dataset(layout.dataset(), &info);
  const std::vector<std::size_t> targets = resolve_targets(cfg, info);
  const FilterConfig fcfg = cfg.filter_config();
  const std::vector<std::size_t>& test = ds.split.test;
  std::vector<EstimateTrace> traces(test.size());
  parallel_for(test.size(), threads, [&](std::size_t i) {
    const std::size_t idx = test[i];
    try {
      traces[i] = run_rkf(ds.sequences[idx].measurements, fcfg, cfg.scenario.building);
    } catch (const Error& e) {
      throw Error(e.kind(), info.ids[idx] + ": " + e.message());
    }
  });
  StageResult r;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::string& id = info.ids[test[i]];
    const std::string tpath = join(layout.traces(), id + ".csv");
    io::write_text(tpath, io::trace_csv(traces[i]));
    r.files.push_back(tpath);
    const std::string ppath = join(layout.predictions("rkf"), id + ".csv");
    io::write_text(ppath, io::prediction_csv(traces[i].time, target_columns(traces[i].u_est, targets), targets));
    r.files.push_back(ppath);
  }
  r.seconds = seconds_since(t0);
  return r;
}

Evaluation evaluate(const ExperimentConfig& cfg, const Layout& layout, const std::string& predictions_root) {
  const auto t0 = std::chrono::steady_clock::now();
  io::DatasetInfo info;
  const Dataset ds = io::read_dataset(layout.dataset(), &info);
  const std::vector<std::size_t> targets = resolve_targets(cfg, info);
  if (!fs::is_directory(predictions_root)) {
    throw Error(ErrorKind::Io, "no predictions directory at '" + predictions_root + "'");
  }
  std::vector<std::string> methods;
  for (const auto& e : fs::directory_iterator(predictions_root)) {
    if (e.is_directory()) methods.push_back(e.path().filename().string());
  }
  if (methods.empty()) throw Error(ErrorKind::Io, "no method directories under '" + predictions_root + "'");
  const std::vector<std::string> canonical = {"rkf", "lstm", "gru", "conv"};
  auto rank = [&](const std::string& m) {
    const auto it = std::find(canonical.begin(), canonical.end(), m);
    return static_cast<std::size_t>(it - canonical.begin());
  };
  std::sort(methods.begin(), methods.end(), [&](const std::string& a, const std::string& b) {
    return rank(a) != rank(b) ? rank(a) < rank(b) : a < b;
  });

  Evaluation ev;
  std::vector<RunResult> runs;
  for (const std::string& method : methods) {
    for (std::size_t idx : ds.split.test) {
      const Sequence& s = ds.sequences[idx];
      const std::string& id = info.ids[idx];
      const std::string path = join(join(predictions_root, method), id + ".csv");
      if (!fs::exists(path)) throw Error(ErrorKind::Io, "missing prediction file '" + path + "'");
      const io::CsvTable table = io::read_csv(path);
      if (table.data.rows() != s.measurements.samples()) {
        throw Error(ErrorKind::InvalidLength, path + ": " + std::to_string(table.data.rows()) + " rows, truth has " +
                                                  std::to_string(s.measurements.samples()));
      }
      for (std::size_t d : targets) {
        const std::string col = "f_pred_" + std::to_string(d + 1);
        const Eigen::VectorXd pred = table.data.col(table.column(col));
        const Eigen::VectorXd truth = s.load.forces.col(static_cast<Eigen::Index>(d));
        RunResult rr;
        rr.method = method;
        rr.sequence = targets.size() == 1 ? id : id + "_dof" + std::to_string(d + 1);
        try {
          rr.curve = accumulated_error(pred, truth, cfg.eps_rel, s.measurements.time);
        } catch (const Error& e) {
          throw Error(e.kind(), rr.sequence + ": " + e.message());
        }
        rr.mse = mse(pred, truth);
        const std::string cpath = join(join(layout.evaluation(), method), rr.sequence + "_E.csv");
        io::write_text(cpath, io::error_curve_csv(rr.curve));
        ev.stage.files.push_back(cpath);
        runs.push_back(std::move(rr));
      }
    }
  }
  ev.table = summarize(runs);
  io::write_text(layout.summary(), ev.table.to_csv());
  ev.stage.files.push_back(layout.summary());
  ev.stage.seconds = seconds_since(t0);
  return ev;
}

std::string level_root(const ExperimentConfig& cfg, double nsr) {
  return cfg.noise_sweep.empty() ? cfg.out_dir : join(cfg.out_dir, level_name(nsr));
}

Comparison compare(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  Comparison out;
  std::map<std::string, double> timings;
  const bool sweep = !cfg.noise_sweep.empty();
  for (double nsr : cfg.noise_levels()) {
    ExperimentConfig level = cfg;
    level.scenario.nsr = nsr;
    const Layout layout{level_root(cfg, nsr)};
    const std::string prefix = sweep ? level_name(nsr) + "/" : "";
    auto record = [&](const std::string& stage, const StageResult& r) {
      out.files.insert(out.files.end(), r.files.begin(), r.files.end());
      timings[prefix + stage] = r.seconds;
    };
    record("generate", labelled(prefix + "generate", [&] { return generate(level, layout, threads); }));

    // Networks train concurrently when workers are available; each writes its own files.
    std::vector<StageResult> trained(kAllCells.size());
    parallel_for(kAllCells.size(), threads, [&](std::size_t i) {
      const std::string name = nets::to_string(kAllCells[i]);
      trained[i] = labelled(prefix + "train " + name, [&] { return train(level, layout, kAllCells[i]); });
    });
    for (std::size_t i = 0; i < kAllCells.size(); ++i) record("train_" + nets::to_string(kAllCells[i]), trained[i]);

    record("filter", labelled(prefix + "filter", [&] { return filter(level, layout, threads); }));
    Evaluation ev = labelled(prefix + "evaluate", [&] { return evaluate(level, layout, layout.predictions()); });
    record("evaluate", ev.stage);
    out.levels.emplace_back(nsr, std::move(ev.table));
  }

  if (sweep) {
    // One row per noise level: mean final E per method over the test sequences.
    const auto& methods = out.levels.front().second.methods;
    std::vector<std::string> header{"nsr"};
    for (const auto& m : methods) header.push_back("E_mean_" + m);
    Eigen::MatrixXd data(static_cast<Eigen::Index>(out.levels.size()), static_cast<Eigen::Index>(header.size()));
    for (std::size_t l = 0; l < out.levels.size(); ++l) {
      data(static_cast<Eigen::Index>(l), 0) = out.levels[l].first;
      for (std::size_t j = 0; j < methods.size(); ++j) {
        const auto col = out.levels[l].second.column(methods[j]);
        double sum = 0.0;
        for (double v : col) sum += v;
        data(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j + 1)) = sum / static_cast<double>(col.size());
      }
    }
    const std::string path = join(cfg.out_dir, "sweep_summary.csv");
    io::write_text(path, io::csv_string(header, data));
    out.files.push_back(path);
  }

  const std::string cfg_path = join(cfg.out_dir, "config.json");
  io::write_text(cfg_path, config_json(cfg));
  out.files.push_back(cfg_path);
  write_manifest(cfg, cfg.out_dir, out.files, "compare", timings);
  out.files.push_back(Layout{cfg.out_dir}.manifest());
  return out;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& root, const std::vector<std::string>& files,
                    const std::string& command, const std::map<std::string, double>& timings) {
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  json entries = json::array();
  for (const auto& f : sorted) {
    entries.push_back({{"path", fs::relative(f, root).generic_string()},
                       {"bytes", fs::file_size(f)},
                       {"sha256", io::sha256_file(f)}});
  }
  json seeds = {{"master", cfg.seed},
                {"dataset", cfg.seed},
                {"network_lstm", substream_seed(cfg.seed, "network", static_cast<std::uint64_t>(nets::CellKind::Lstm))},
                {"network_gru", substream_seed(cfg.seed, "network", static_cast<std::uint64_t>(nets::CellKind::Gru))},
                {"network_conv", substream_seed(cfg.seed, "network", static_cast<std::uint64_t>(nets::CellKind::Conv))}};
  json manifest = {{"format", "loadid-run"},
                   {"version", kVersion},
                   {"command", command},
                   {"preset", cfg.preset},
                   {"threads", default_threads()},
                   {"seeds", seeds},
                   {"timings_seconds", timings},
                   {"files", entries}};
  io::write_text(join(root, "manifest.json"), manifest.dump(2) + "\n");
}

}  // namespace loadid::pipeline
