#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace loadid {

/// Accumulated absolute relative load error. Samples with
/// |truth| < eps_rel * max|truth| contribute nothing and are flagged false
/// in `retained`.
struct ErrorCurve {
  Eigen::VectorXd time;
  Eigen::VectorXd E;
  std::vector<bool> retained;
  double eps_rel = 0.0;

  double final_value() const { return E.size() ? E(E.size() - 1) : 0.0; }
};

ErrorCurve accumulated_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth,
                             double eps_rel = 1e-3, const Eigen::VectorXd& time = {});

/// RMS(noisy - clean) / RMS(clean).
double rms_nsr(const Eigen::VectorXd& clean, const Eigen::VectorXd& noisy);

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

struct RunResult {
  std::string method;
  std::string sequence;
  ErrorCurve curve;
  double mse = 0.0;
};

struct SummaryRow {
  std::string sequence;
  std::vector<double> final_error;  // one per method, in `methods` order
  std::vector<double> mse;
};

struct SummaryTable {
  std::vector<std::string> methods;  // first-appearance order
  std::vector<SummaryRow> rows;      // first-appearance order of sequences

  /// Column of final-E values for a method; throws if unknown.
  std::vector<double> column(const std::string& method) const;
  std::string to_csv() const;
};

SummaryTable summarize(const std::vector<RunResult>& runs);

}  // namespace loadid
