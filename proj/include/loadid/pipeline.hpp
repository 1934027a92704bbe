#pragma once

#include <map>
#include <string>
#include <vector>

#include "loadid/experiment.hpp"
#include "loadid/metrics.hpp"

namespace loadid::pipeline {

inline constexpr const char* kVersion = "0.1.0";

/// Directory layout of one run below its root.
struct Layout {
  std::string root;

  std::string dataset() const;
  std::string models() const;
  std::string traces() const;
  std::string predictions() const;
  std::string predictions(const std::string& method) const;
  std::string evaluation() const;
  std::string summary() const;
  std::string manifest() const;
};

struct StageResult {
  std::vector<std::string> files;
  double seconds = 0.0;
};

/// Generates the dataset into layout.dataset().
StageResult generate(const ExperimentConfig& cfg, const Layout& layout, unsigned threads);

/// Trains one network on the stored dataset. Writes the model file, the
/// loss curve and the network's test-split predictions.
StageResult train(const ExperimentConfig& cfg, const Layout& layout, nets::CellKind kind);

/// Runs the filter on every test sequence. Writes full traces plus the
/// load estimate at the target DOFs in the common prediction format.
StageResult filter(const ExperimentConfig& cfg, const Layout& layout, unsigned threads);

struct Evaluation {
  StageResult stage;
  SummaryTable table;
};

/// Scores every method directory below `predictions_root` against the
/// dataset truth. Method order: rkf, lstm, gru, conv, then others by name.
Evaluation evaluate(const ExperimentConfig& cfg, const Layout& layout, const std::string& predictions_root);

struct Comparison {
  std::vector<std::pair<double, SummaryTable>> levels;  // one per noise level
  std::vector<std::string> files;
};

/// generate -> train x3 -> filter -> evaluate for every noise level, then
/// the run manifest. Errors carry the stage label.
Comparison compare(const ExperimentConfig& cfg, unsigned threads);

/// Directory of one noise level inside a sweep ("nsr_0.05"); the root
/// itself when there is a single level.
std::string level_root(const ExperimentConfig& cfg, double nsr);

/// JSON run manifest listing every file (relative path, size, SHA-256),
/// seeds, version, and stage timings.
void write_manifest(const ExperimentConfig& cfg, const std::string& root, const std::vector<std::string>& files,
                    const std::string& command, const std::map<std::string, double>& timings);

}  // namespace loadid::pipeline
