#include "loadid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "loadid/error.hpp"

namespace loadid {

ErrorCurve accumulated_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth,
                             double eps_rel, const Eigen::VectorXd& time) {
  if (pred.size() != truth.size()) throw Error(ErrorKind::InvalidLength, "prediction and truth lengths differ");
  if (!(eps_rel > 0.0)) throw Error(ErrorKind::InvalidParameter, "eps_rel must be > 0");
  if (time.size() != 0 && time.size() != truth.size()) {
    throw Error(ErrorKind::InvalidLength, "time grid length differs from truth");
  }
  const double peak = truth.size() ? truth.cwiseAbs().maxCoeff() : 0.0;
  if (!(peak > 0.0)) throw Error(ErrorKind::DegenerateTruth, "true load is identically zero");

  ErrorCurve c;
  c.eps_rel = eps_rel;
  c.time = time.size() ? time : Eigen::VectorXd::LinSpaced(truth.size(), 0.0, static_cast<double>(truth.size() - 1));
  c.E.resize(truth.size());
  c.retained.assign(static_cast<std::size_t>(truth.size()), false);
  const double threshold = eps_rel * peak;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < truth.size(); ++k) {
    if (std::abs(truth(k)) >= threshold) {
      acc += std::abs((pred(k) - truth(k)) / truth(k));
      c.retained[static_cast<std::size_t>(k)] = true;
    }
    c.E(k) = acc;
  }
  return c;
}

double rms_nsr(const Eigen::VectorXd& clean, const Eigen::VectorXd& noisy) {
  if (clean.size() != noisy.size() || clean.size() == 0) {
    throw Error(ErrorKind::InvalidLength, "clean and noisy must be non-empty and equally long");
  }
  const double clean_ms = clean.squaredNorm();
  if (!(clean_ms > 0.0)) throw Error(ErrorKind::DegenerateChannel, "clean signal has zero RMS");
  return std::sqrt((noisy - clean).squaredNorm() / clean_ms);
}

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) {
    throw Error(ErrorKind::InvalidLength, "mse needs equal, non-empty inputs");
  }
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

std::vector<double> SummaryTable::column(const std::string& method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) throw Error(ErrorKind::Config, "no method '" + method + "' in summary");
  const auto j = static_cast<std::size_t>(it - methods.begin());
  std::vector<double> col;
  col.reserve(rows.size());
  for (const auto& r : rows) col.push_back(r.final_error[j]);
  return col;
}

std::string SummaryTable::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "case";
  for (const auto& m : methods) os << ",E_final_" << m;
  for (const auto& m : methods) os << ",mse_" << m;
  os << '\n';
  for (const auto& r : rows) {
    os << r.sequence;
    for (double v : r.final_error) os << ',' << v;
    for (double v : r.mse) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

SummaryTable summarize(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw Error(ErrorKind::InvalidLength, "nothing to summarize");
  SummaryTable t;
  std::vector<std::string> sequences;
  for (const auto& r : runs) {
    if (std::find(t.methods.begin(), t.methods.end(), r.method) == t.methods.end()) t.methods.push_back(r.method);
    if (std::find(sequences.begin(), sequences.end(), r.sequence) == sequences.end()) sequences.push_back(r.sequence);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : sequences) {
    SummaryRow row;
    row.sequence = s;
    row.final_error.assign(t.methods.size(), nan);
    row.mse.assign(t.methods.size(), nan);
    t.rows.push_back(std::move(row));
  }
  for (const auto& r : runs) {
    const auto i = static_cast<std::size_t>(std::find(sequences.begin(), sequences.end(), r.sequence) - sequences.begin());
    const auto j = static_cast<std::size_t>(std::find(t.methods.begin(), t.methods.end(), r.method) - t.methods.begin());
    t.rows[i].final_error[j] = r.curve.final_value();
    t.rows[i].mse[j] = r.mse;
  }
  return t;
}

}  // namespace loadid
