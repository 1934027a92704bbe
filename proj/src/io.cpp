#include "loadid/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "loadid/error.hpp"

namespace loadid::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Eigen::Index CsvTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

Eigen::Index CsvTable::column(const std::string& name) const {
  const Eigen::Index i = find(name);
  if (i < 0) throw Error(ErrorKind::Io, "CSV has no column '" + name + "'");
  return i;
}

std::string csv_string(const std::vector<std::string>& header, const Eigen::MatrixXd& data) {
  if (static_cast<Eigen::Index>(header.size()) != data.cols()) {
    throw Error(ErrorKind::Shape, "CSV header and data column counts differ");
  }
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c) out += ',';
      out += format_double(data(r, c));
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& s, const std::string& origin, std::size_t line) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s[0] == '+') ++begin;
  const auto res = std::from_chars(begin, s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Io, origin + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  CsvTable t;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw Error(ErrorKind::Io, origin + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, origin, lineno));
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(ErrorKind::Io, origin + ": empty CSV");
  t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      t.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text(path), path); }

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text(path)); }

// ---------------------------------------------------------------------------

std::string sequence_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%03zu", index);
  return buf;
}

std::string sequence_csv(const Sequence& s) {
  const auto& m = s.measurements;
  const Eigen::Index T = m.samples();
  const Eigen::Index nm = m.noisy_accel.cols();
  const Eigen::Index n = s.load.forces.cols();
  if (m.noisy_accel.rows() != T || s.load.forces.rows() != T) {
    throw Error(ErrorKind::InvalidLength, "sequence channels differ in length");
  }
  std::vector<std::string> header{"t"};
  for (std::size_t d : m.measured_dofs) header.push_back("a_meas_" + std::to_string(d + 1));
  for (Eigen::Index d = 0; d < n; ++d) header.push_back("f_true_" + std::to_string(d + 1));
  Eigen::MatrixXd data(T, 1 + nm + n);
  data.col(0) = m.time;
  data.middleCols(1, nm) = m.noisy_accel;
  data.rightCols(n) = s.load.forces;
  return csv_string(header, data);
}

namespace {

// "a_meas_3" -> 2 when the prefix matches
bool dof_label(const std::string& name, const std::string& prefix, std::size_t& dof) {
  if (name.rfind(prefix, 0) != 0) return false;
  const std::string rest = name.substr(prefix.size());
  std::size_t v = 0;
  const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), v);
  if (rest.empty() || res.ec != std::errc() || res.ptr != rest.data() + rest.size() || v < 1) {
    throw Error(ErrorKind::InvalidDof, "column '" + name + "' does not carry a 1-based DOF");
  }
  dof = v - 1;
  return true;
}

}  // namespace

Sequence sequence_from_table(const CsvTable& table, std::size_t n_dofs, double nsr) {
  const Eigen::Index tc = table.column("t");
  std::vector<std::pair<std::size_t, Eigen::Index>> accel, force;
  std::size_t max_dof = 0;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    std::size_t d = 0;
    if (dof_label(table.header[i], "a_meas_", d)) {
      accel.emplace_back(d, static_cast<Eigen::Index>(i));
    } else if (dof_label(table.header[i], "f_true_", d)) {
      force.emplace_back(d, static_cast<Eigen::Index>(i));
    } else {
      continue;
    }
    max_dof = std::max(max_dof, d + 1);
  }
  if (accel.empty()) throw Error(ErrorKind::Io, "record has no a_meas_<dof> columns");
  const std::size_t n = n_dofs ? n_dofs : max_dof;
  if (max_dof > n) throw Error(ErrorKind::InvalidDof, "record references a DOF beyond the building");
  const Eigen::Index T = table.data.rows();
  if (T < 2) throw Error(ErrorKind::InvalidLength, "record needs at least two samples");

  const Eigen::VectorXd time = table.data.col(tc);
  const double dt = time(1) - time(0);
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidStep, "time column must increase");
  for (Eigen::Index k = 1; k < T; ++k) {
    if (std::abs(time(k) - time(k - 1) - dt) > 1e-6 * dt + 1e-12 * std::abs(time(k))) {
      throw Error(ErrorKind::InvalidStep, "time column is not uniformly sampled (row " + std::to_string(k + 1) + ")");
    }
  }

  Sequence s;
  auto& m = s.measurements;
  m.time = time;
  m.nsr = nsr;
  m.noisy_accel.resize(T, static_cast<Eigen::Index>(accel.size()));
  for (std::size_t j = 0; j < accel.size(); ++j) {
    m.measured_dofs.push_back(accel[j].first);
    m.noisy_accel.col(static_cast<Eigen::Index>(j)) = table.data.col(accel[j].second);
  }
  const PseudoMeasurements pm = make_pseudo_measurements(m.noisy_accel, dt);
  m.pseudo_disp = Eigen::MatrixXd::Zero(T, static_cast<Eigen::Index>(n));
  m.pseudo_vel = Eigen::MatrixXd::Zero(T, static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < accel.size(); ++j) {
    m.pseudo_disp.col(static_cast<Eigen::Index>(accel[j].first)) = pm.disp.col(static_cast<Eigen::Index>(j));
    m.pseudo_vel.col(static_cast<Eigen::Index>(accel[j].first)) = pm.vel.col(static_cast<Eigen::Index>(j));
  }
  s.load.time = time;
  s.load.forces = Eigen::MatrixXd::Zero(T, static_cast<Eigen::Index>(n));
  for (const auto& [d, c] : force) s.load.forces.col(static_cast<Eigen::Index>(d)) = table.data.col(c);
  return s;
}

namespace {

json dofs_json(const std::vector<std::size_t>& dofs) {
  json j = json::array();
  for (auto d : dofs) j.push_back(d + 1);
  return j;
}

std::vector<std::size_t> json_dofs(const json& j) {
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    const auto d = v.get<long long>();
    if (d < 1) throw Error(ErrorKind::InvalidDof, "DOF " + std::to_string(d) + " is not 1-based");
    out.push_back(static_cast<std::size_t>(d - 1));
  }
  return out;
}

json indices_json(const std::vector<std::size_t>& idx) {
  json j = json::array();
  for (auto i : idx) j.push_back(sequence_id(i));
  return j;
}

}  // namespace

std::vector<std::string> write_dataset(const Dataset& ds, const DatasetInfo& info, const std::string& dir) {
  std::vector<std::string> written;
  json seqs = json::array();
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const Sequence& s = ds.sequences[i];
    const std::string id = sequence_id(i);
    const std::string file = id + ".csv";
    const std::string path = (fs::path(dir) / file).string();
    write_text(path, sequence_csv(s));
    written.push_back(path);
    json params = json::object();
    for (const auto& [k, v] : s.load.descriptor.parameters) params[k] = v;
    seqs.push_back({{"id", id},
                    {"file", file},
                    {"seed", s.measurements.seed},
                    {"descriptor",
                     {{"kind", to_string(s.load.descriptor.kind)},
                      {"parameters", params},
                      {"seed", s.load.descriptor.seed}}}});
  }
  json manifest = {{"format", "loadid-dataset"},
                   {"version", 1},
                   {"scenario", info.scenario},
                   {"n_stories", info.n_stories},
                   {"dt", info.dt},
                   {"duration", info.duration},
                   {"nsr", info.nsr},
                   {"seed", info.seed},
                   {"measured_dofs", dofs_json(info.measured_dofs)},
                   {"target_dofs", dofs_json(info.target_dofs)},
                   {"split",
                    {{"train", indices_json(ds.split.train)},
                     {"val", indices_json(ds.split.val)},
                     {"test", indices_json(ds.split.test)}}},
                   {"sequences", seqs}};
  const std::string path = (fs::path(dir) / "dataset.json").string();
  write_text(path, manifest.dump(2) + "\n");
  written.push_back(path);
  return written;
}

Dataset read_dataset(const std::string& dir, DatasetInfo* info_out) {
  const std::string mpath = (fs::path(dir) / "dataset.json").string();
  if (!fs::exists(mpath)) throw Error(ErrorKind::Io, "no dataset manifest at '" + mpath + "'");
  Dataset ds;
  DatasetInfo info;
  try {
    const json m = json::parse(read_text(mpath));
    info.scenario = m.value("scenario", std::string("external"));
    info.n_stories = m.value("n_stories", std::size_t{0});
    info.nsr = m.value("nsr", 0.0);
    info.seed = m.value("seed", std::uint64_t{0});
    if (m.contains("measured_dofs")) info.measured_dofs = json_dofs(m.at("measured_dofs"));
    if (m.contains("target_dofs")) info.target_dofs = json_dofs(m.at("target_dofs"));
    std::map<std::string, std::size_t> index_of;
    for (const auto& e : m.at("sequences")) {
      const std::string file = e.at("file").get<std::string>();
      const std::string id = e.value("id", fs::path(file).stem().string());
      Sequence s = sequence_from_table(read_csv((fs::path(dir) / file).string()), info.n_stories, info.nsr);
      if (!info.measured_dofs.empty() && s.measurements.measured_dofs != info.measured_dofs) {
        throw Error(ErrorKind::Io, file + ": measured columns do not match the manifest");
      }
      s.measurements.seed = e.value("seed", std::uint64_t{0});
      if (e.contains("descriptor")) {
        const auto& d = e.at("descriptor");
        s.load.descriptor.kind = load_kind_from_string(d.at("kind").get<std::string>());
        s.load.descriptor.seed = d.value("seed", std::uint64_t{0});
        for (const auto& [k, v] : d.at("parameters").items()) s.load.descriptor.parameters[k] = v.get<double>();
      }
      if (!index_of.emplace(id, ds.sequences.size()).second) throw Error(ErrorKind::Io, "duplicate sequence id " + id);
      info.ids.push_back(id);
      ds.sequences.push_back(std::move(s));
    }
    if (ds.sequences.empty()) throw Error(ErrorKind::Io, "dataset manifest lists no sequences");
    if (info.n_stories == 0) info.n_stories = static_cast<std::size_t>(ds.sequences.front().load.forces.cols());
    if (info.measured_dofs.empty()) info.measured_dofs = ds.sequences.front().measurements.measured_dofs;
    info.dt = ds.sequences.front().measurements.dt();
    info.duration = ds.sequences.front().measurements.time.tail(1)(0) - ds.sequences.front().measurements.time(0);
    auto pick = [&](const char* key, std::vector<std::size_t>& out) {
      if (!m.contains("split") || !m.at("split").contains(key)) return;
      for (const auto& v : m.at("split").at(key)) {
        const auto it = index_of.find(v.get<std::string>());
        if (it == index_of.end()) throw Error(ErrorKind::Io, "split references unknown sequence " + v.dump());
        out.push_back(it->second);
      }
    };
    pick("train", ds.split.train);
    pick("val", ds.split.val);
    pick("test", ds.split.test);
    // A manifest without a split treats every record as a test record.
    if (!m.contains("split")) {
      for (std::size_t i = 0; i < ds.sequences.size(); ++i) ds.split.test.push_back(i);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, "malformed dataset manifest '" + mpath + "': " + e.what());
  }
  if (info_out) *info_out = info;
  return ds;
}

// ---------------------------------------------------------------------------

std::string trace_csv(const EstimateTrace& tr) {
  const Eigen::Index T = tr.time.size();
  const Eigen::Index n = tr.u_est.cols(), p = tr.theta.cols(), z = tr.z.cols();
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("u_est_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < p; ++i) header.push_back("theta_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < z; ++i) header.push_back("z_" + std::to_string(i + 1));
  header.push_back("innov_norm");
  header.push_back("rho_norm");
  Eigen::MatrixXd data(T, 3 + n + p + z);
  data << tr.time, tr.u_est, tr.theta, tr.z, tr.innov_norm, tr.rho_norm;
  return csv_string(header, data);
}

EstimateTrace trace_from_table(const CsvTable& table) {
  EstimateTrace tr;
  const Eigen::Index T = table.data.rows();
  tr.time = table.data.col(table.column("t"));
  auto block = [&](const std::string& prefix) {
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 1;; ++i) {
      const Eigen::Index c = table.find(prefix + std::to_string(i));
      if (c < 0) break;
      cols.push_back(c);
    }
    Eigen::MatrixXd out(T, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = table.data.col(cols[j]);
    return out;
  };
  tr.u_est = block("u_est_");
  tr.theta = block("theta_");
  tr.z = block("z_");
  if (tr.u_est.cols() == 0) throw Error(ErrorKind::Io, "trace has no u_est_<dof> columns");
  tr.innov_norm = table.find("innov_norm") >= 0 ? Eigen::VectorXd(table.data.col(table.column("innov_norm")))
                                                 : Eigen::VectorXd::Zero(T);
  tr.rho_norm = table.find("rho_norm") >= 0 ? Eigen::VectorXd(table.data.col(table.column("rho_norm")))
                                             : Eigen::VectorXd::Zero(T);
  return tr;
}

std::string error_curve_csv(const ErrorCurve& c) {
  const Eigen::Index T = c.E.size();
  Eigen::MatrixXd data(T, 3);
  for (Eigen::Index k = 0; k < T; ++k) {
    data(k, 0) = c.time(k);
    data(k, 1) = c.E(k);
    data(k, 2) = c.retained[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
  }
  return csv_string({"t", "E", "retained"}, data);
}

std::string prediction_csv(const Eigen::VectorXd& time, const Eigen::MatrixXd& values,
                           const std::vector<std::size_t>& dofs, const std::string& label) {
  if (values.rows() != time.size() || values.cols() != static_cast<Eigen::Index>(dofs.size())) {
    throw Error(ErrorKind::Shape, "prediction block does not match time grid / DOF list");
  }
  std::vector<std::string> header{"t"};
  for (auto d : dofs) header.push_back(label + "_" + std::to_string(d + 1));
  Eigen::MatrixXd data(time.size(), 1 + values.cols());
  data << time, values;
  return csv_string(header, data);
}

}  // namespace loadid::io
