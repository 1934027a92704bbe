#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loadid/model.hpp"

namespace loadid {

enum class LoadKind { Harmonic, Base, Impulse };

std::string to_string(LoadKind kind);
LoadKind load_kind_from_string(const std::string& s);

struct LoadDescriptor {
  LoadKind kind = LoadKind::Harmonic;
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;
};

/// Sampled force history; forces is T x n (one column per DOF).
struct LoadSignal {
  Eigen::VectorXd time;
  Eigen::MatrixXd forces;
  LoadDescriptor descriptor;

  Eigen::Index samples() const { return time.size(); }
  double dt() const { return time.size() > 1 ? time(1) - time(0) : 0.0; }
};

struct ResponseRecord {
  Eigen::VectorXd time;
  Eigen::MatrixXd displacements;  // T x n
  Eigen::MatrixXd velocities;     // T x n
  Eigen::MatrixXd accelerations;  // T x n
  LoadSignal load;
};

/// Noisy acceleration channels for the measured DOFs plus offline
/// pseudo-measurements. pseudo_* are T x n; columns of unmeasured DOFs are
/// zero because no offline signal exists for them.
struct MeasurementSet {
  Eigen::VectorXd time;
  std::vector<std::size_t> measured_dofs;
  Eigen::MatrixXd noisy_accel;  // T x |measured|
  Eigen::MatrixXd clean_accel;  // T x |measured|; empty for ingested records
  double nsr = 0.0;
  Eigen::MatrixXd pseudo_disp;
  Eigen::MatrixXd pseudo_vel;
  std::uint64_t seed = 0;

  Eigen::Index samples() const { return time.size(); }
  double dt() const { return time.size() > 1 ? time(1) - time(0) : 0.0; }
};

/// Uniform grid t_k = k dt, k = 0..round(duration/dt).
Eigen::VectorXd uniform_grid(double duration, double dt);

LoadSignal gen_decaying_harmonic(double amplitude, double omega, double decay, double onset,
                                 double duration, double dt, std::size_t dof, std::size_t n);

struct BaseEnvelope {
  double rise = 2.0;
  double plateau = 8.0;
  double fall = 8.0;
};

/// Ground acceleration: trapezoid-enveloped, band-passed Gaussian noise with
/// peak |a_g| = intensity. Effective story forces F = -M 1 a_g.
LoadSignal gen_base_excitation(double intensity, double f_lo, double f_hi,
                               const BaseEnvelope& envelope, double duration, double dt,
                               const ShearBuildingSpec& spec, std::uint64_t seed);

/// Half-sine pulse of the given peak on [impact_time, impact_time + width].
LoadSignal gen_impulse(double peak, double width, double impact_time, double duration, double dt,
                       std::size_t dof, std::size_t n);

/// Classic RK4 with linearly interpolated input at the half step.
/// z0 = [y0; v0]; empty z0 means zero initial conditions.
ResponseRecord integrate_rk4(const SystemMatrices& mats, const LoadSignal& load,
                             const Eigen::VectorXd& z0 = {});

/// Per column: clean + s * g with g ~ N(0,1) and s chosen so that
/// RMS(noise) = nsr * RMS(clean) exactly.
Eigen::MatrixXd add_noise(const Eigen::MatrixXd& clean, double nsr, std::uint64_t seed);

struct PseudoMeasurements {
  Eigen::MatrixXd disp;
  Eigen::MatrixXd vel;
};

/// Cumulative trapezoid, column-wise, zero initial values.
PseudoMeasurements make_pseudo_measurements(const Eigen::MatrixXd& accel, double dt);

// ---------------------------------------------------------------------------
// Dataset generation

enum class ScenarioKind { Shaker, Base, Impact };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Shaker;
  ShearBuildingSpec building = ShearBuildingSpec::six_story();
  double duration = 200.0;
  double dt = 0.01;
  std::vector<std::size_t> measured_dofs = {2, 4, 5};
  double nsr = 0.05;

  // shaker and impact load location
  std::size_t load_dof = 5;

  Range amplitude{50.0, 200.0};
  Range omega{2.0, 12.0};
  Range decay{0.01, 0.05};
  Range onset{0.0, 40.0};

  Range intensity{0.5, 2.0};
  double f_lo = 0.2;
  double f_hi = 5.0;
  BaseEnvelope envelope{};

  Range peak{100.0, 500.0};
  Range width{0.05, 0.2};
  Range impact_time{0.5, 10.0};

  void validate() const;

  /// DOFs whose true force is the identification target. Base excitation
  /// loads every DOF in proportion to mass; DOF 0 stands for the base load.
  std::vector<std::size_t> target_dofs() const;
};

struct Sequence {
  MeasurementSet measurements;
  LoadSignal load;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct Dataset {
  std::vector<Sequence> sequences;
  DatasetSplit split;
};

struct SplitCounts {
  std::size_t train = 11;
  std::size_t val = 4;
  std::size_t test = 6;

  std::size_t total() const { return train + val + test; }
};

/// One sequence: draw load parameters, integrate, add noise, pseudo-measure.
/// The RNG stream depends only on (seed, index).
Sequence generate_sequence(const ScenarioConfig& scenario, std::uint64_t seed, std::size_t index);

/// `count` sequences and a seed-determined shuffled split.
Dataset build_dataset(const ScenarioConfig& scenario, std::size_t count, SplitCounts split,
                      std::uint64_t seed, unsigned threads = 1);

}  // namespace loadid
