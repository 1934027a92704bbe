#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loadid/nets.hpp"
#include "loadid/rkf.hpp"
#include "loadid/simulate.hpp"

namespace loadid {

/// Everything one run of the workbench needs. DOF lists are 0-based here and
/// 1-based in the JSON form.
struct ExperimentConfig {
  std::string preset;  // informational: the preset layered under the document
  ScenarioConfig scenario;
  std::vector<std::size_t> input_dofs = {5};  // DOFs carrying the unknown load
  std::size_t count = 21;
  SplitCounts split;
  std::vector<double> noise_sweep;  // empty: scenario.nsr only
  nets::NetworkConfig lstm, gru, conv;
  FilterConfig filter;
  double eps_rel = 1e-3;
  std::string out_dir = "loadid-out";
  std::uint64_t seed = 0;

  ExperimentConfig();

  void validate() const;
  const nets::NetworkConfig& network(nets::CellKind kind) const;
  nets::NetworkConfig& network(nets::CellKind kind);
  /// DOFs whose load is identified and scored.
  std::vector<std::size_t> target_dofs() const { return scenario.target_dofs(); }
  /// Filter configuration with the known-input mask for this scenario.
  FilterConfig filter_config() const;
  /// Noise levels the comparison visits.
  std::vector<double> noise_levels() const;
};

inline constexpr std::array<nets::CellKind, 3> kAllCells = {nets::CellKind::Lstm, nets::CellKind::Gru,
                                                            nets::CellKind::Conv};

/// The published schema (JSON text).
const std::string& config_schema();
/// Built-in preset documents: "desk" or "paper".
const std::string& preset_document(const std::string& name);

/// Validates `document` against the schema and layers it over `base`.
/// A "preset" key in the document first layers that preset over `base`.
ExperimentConfig apply_config(const std::string& document, const ExperimentConfig& base = ExperimentConfig{});
ExperimentConfig preset_config(const std::string& name);

/// Canonical JSON form (1-based DOFs); round-trips through apply_config.
std::string config_json(const ExperimentConfig& cfg);

/// Throws Error(Config) naming the first violation.
void validate_schema(const std::string& document);

}  // namespace loadid
