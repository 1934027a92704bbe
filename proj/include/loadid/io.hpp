#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loadid/metrics.hpp"
#include "loadid/rkf.hpp"
#include "loadid/simulate.hpp"

namespace loadid::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd data;  // rows x columns

  /// Index of a column; -1 when absent.
  Eigen::Index find(const std::string& name) const;
  Eigen::Index column(const std::string& name) const;  // throws Io when absent
};

std::string csv_string(const std::vector<std::string>& header, const Eigen::MatrixXd& data);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<memory>");
CsvTable read_csv(const std::string& path);

std::string read_text(const std::string& path);
/// Creates parent directories as needed.
void write_text(const std::string& path, const std::string& text);

/// Hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// ---------------------------------------------------------------------------
// Datasets

/// `t, a_meas_<dof>..., f_true_<dof>...` with 1-based DOF labels and a
/// force column for every DOF.
std::string sequence_csv(const Sequence& s);

/// Builds a sequence from a table of that shape. Force columns that are
/// absent are zero; `n_dofs` = 0 infers the DOF count from the labels.
/// The time column must be uniform.
Sequence sequence_from_table(const CsvTable& table, std::size_t n_dofs = 0, double nsr = 0.0);

struct DatasetInfo {
  std::string scenario;
  std::size_t n_stories = 0;
  double dt = 0.0;
  double duration = 0.0;
  double nsr = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> measured_dofs;  // 0-based
  std::vector<std::size_t> target_dofs;    // 0-based
  std::vector<std::string> ids;            // one per sequence, manifest order
};

/// Writes `seq_<id>.csv` per sequence and `dataset.json`; returns the
/// written paths (manifest last).
std::vector<std::string> write_dataset(const Dataset& ds, const DatasetInfo& info, const std::string& dir);

/// Reads `dataset.json` in `dir` and every CSV it lists. Sequence entries
/// may omit descriptors, which is how external records are ingested.
Dataset read_dataset(const std::string& dir, DatasetInfo* info = nullptr);

std::string sequence_id(std::size_t index);

// ---------------------------------------------------------------------------
// Result tables

/// `t, u_est_<dof>..., theta_<j>..., z_<i>..., innov_norm, rho_norm`.
std::string trace_csv(const EstimateTrace& tr);
EstimateTrace trace_from_table(const CsvTable& table);

/// `t, E, retained`.
std::string error_curve_csv(const ErrorCurve& c);

/// `t, <label>_<dof>...` for a T x k prediction/truth block.
std::string prediction_csv(const Eigen::VectorXd& time, const Eigen::MatrixXd& values,
                           const std::vector<std::size_t>& dofs, const std::string& label = "f_pred");

}  // namespace loadid::io
