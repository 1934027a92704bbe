#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <limits>

#include "loadid/error.hpp"
#include "loadid/io.hpp"
#include "support.hpp"

using namespace loadid;
using loadid::test::kind_of;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("loadid_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ScenarioConfig tiny() {
  ScenarioConfig sc;
  sc.duration = 2.0;
  sc.dt = 0.02;
  sc.onset = {0.0, 0.5};
  return sc;
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd m = loadid::test::random_matrix(40, 1, rng);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m(i) * std::pow(10.0, static_cast<double>(i % 13) - 6.0);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(-3.0) == "-3");
}

TEST_CASE("CSV round trip and lookups") {
  Eigen::MatrixXd data(2, 3);
  data << 0.0, 1.25, -2.0, 0.1, 1e-300, 3.5e12;
  const std::string text = io::csv_string({"t", "x", "y"}, data);
  CHECK(text.substr(0, 6) == "t,x,y\n");
  const auto t = io::parse_csv(text);
  CHECK(t.header == std::vector<std::string>{"t", "x", "y"});
  CHECK(t.data == data);
  CHECK(t.find("y") == 2);
  CHECK(t.find("z") == -1);
  CHECK(kind_of([&] { t.column("z"); }) == ErrorKind::Io);
  CHECK(kind_of([] { io::csv_string({"a"}, Eigen::MatrixXd::Zero(1, 2)); }) == ErrorKind::Shape);
}

TEST_CASE("CSV parse errors") {
  CHECK(kind_of([] { io::parse_csv(""); }) == ErrorKind::Io);
  CHECK(kind_of([] { io::parse_csv("a,b\n1,2\n3\n"); }) == ErrorKind::Io);
  CHECK(kind_of([] { io::parse_csv("a,b\n1,x\n"); }) == ErrorKind::Io);
  CHECK(kind_of([] { io::read_csv("/nonexistent/loadid.csv"); }) == ErrorKind::Io);
}

TEST_CASE("sha256 of known strings") {
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto dir = scratch_dir("sha");
  io::write_text((dir / "nested" / "f.txt").string(), "abc");
  CHECK(io::sha256_file((dir / "nested" / "f.txt").string()) == io::sha256_hex("abc"));
}

TEST_CASE("sequence CSV uses 1-based labels and round-trips") {
  const auto sc = tiny();
  const Sequence s = generate_sequence(sc, 3, 0);
  const std::string text = io::sequence_csv(s);
  CHECK(text.rfind("t,a_meas_3,a_meas_5,a_meas_6,f_true_1,f_true_2,f_true_3,f_true_4,f_true_5,f_true_6\n", 0) == 0);
  const Sequence back = io::sequence_from_table(io::parse_csv(text), 6, sc.nsr);
  CHECK(back.measurements.measured_dofs == s.measurements.measured_dofs);
  CHECK(back.measurements.noisy_accel == s.measurements.noisy_accel);
  CHECK(back.measurements.pseudo_disp == s.measurements.pseudo_disp);
  CHECK(back.load.forces == s.load.forces);
  CHECK(back.measurements.time == s.measurements.time);
}

TEST_CASE("external records are ingested") {
  const std::string text =
      "t,a_meas_2,f_true_4\n"
      "0,0.5,0\n"
      "0.01,1.0,1\n"
      "0.02,1.5,2\n";
  const Sequence s = io::sequence_from_table(io::parse_csv(text));
  CHECK(s.measurements.measured_dofs == std::vector<std::size_t>{1});
  CHECK(s.load.forces.cols() == 4);
  CHECK(s.load.forces.col(0).isZero(0.0));
  CHECK(s.load.forces(2, 3) == 2.0);
  CHECK(s.measurements.pseudo_disp.cols() == 4);
  CHECK(s.measurements.pseudo_vel(1, 1) == doctest::Approx(0.0075));
  CHECK(s.measurements.pseudo_vel.col(0).isZero(0.0));

  CHECK(kind_of([] { io::sequence_from_table(io::parse_csv("t,a_meas_1\n0,1\n0.01,1\n0.03,1\n")); }) ==
        ErrorKind::InvalidStep);
  CHECK(kind_of([] { io::sequence_from_table(io::parse_csv("t,f_true_1\n0,1\n0.01,1\n")); }) == ErrorKind::Io);
  CHECK(kind_of([] { io::sequence_from_table(io::parse_csv("t,a_meas_0\n0,1\n0.01,1\n")); }) ==
        ErrorKind::InvalidDof);
  CHECK(kind_of([] { io::sequence_from_table(io::parse_csv("t,a_meas_7\n0,1\n0.01,1\n"), 6); }) ==
        ErrorKind::InvalidDof);
  CHECK(kind_of([] { io::sequence_from_table(io::parse_csv("t,a_meas_1\n0,1\n")); }) == ErrorKind::InvalidLength);
}

TEST_CASE("dataset write and read") {
  const auto sc = tiny();
  const Dataset ds = build_dataset(sc, 5, {2, 1, 2}, 77);
  io::DatasetInfo info;
  info.scenario = "shaker";
  info.n_stories = 6;
  info.dt = sc.dt;
  info.duration = sc.duration;
  info.nsr = sc.nsr;
  info.seed = 77;
  info.measured_dofs = sc.measured_dofs;
  info.target_dofs = {5};
  const auto dir = scratch_dir("dataset");
  const auto files = io::write_dataset(ds, info, dir.string());
  REQUIRE(files.size() == 6);
  CHECK(fs::path(files.back()).filename() == "dataset.json");
  CHECK(fs::path(files.front()).filename() == "seq_000.csv");

  io::DatasetInfo got;
  const Dataset back = io::read_dataset(dir.string(), &got);
  CHECK(back.split.train == ds.split.train);
  CHECK(back.split.val == ds.split.val);
  CHECK(back.split.test == ds.split.test);
  CHECK(got.ids == std::vector<std::string>{"seq_000", "seq_001", "seq_002", "seq_003", "seq_004"});
  CHECK(got.measured_dofs == sc.measured_dofs);
  CHECK(got.target_dofs == std::vector<std::size_t>{5});
  CHECK(got.dt == doctest::Approx(sc.dt));
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.sequences[i].measurements.noisy_accel == ds.sequences[i].measurements.noisy_accel);
    CHECK(back.sequences[i].load.forces == ds.sequences[i].load.forces);
    CHECK(back.sequences[i].load.descriptor.parameters == ds.sequences[i].load.descriptor.parameters);
    CHECK(back.sequences[i].measurements.seed == ds.sequences[i].measurements.seed);
  }
  const std::string manifest = io::read_text(files.back());
  CHECK(manifest.find("\"measured_dofs\": [\n    3,\n    5,\n    6\n  ]") != std::string::npos);
}

TEST_CASE("dataset without a split puts everything in test") {
  const auto dir = scratch_dir("external");
  io::write_text((dir / "rec.csv").string(), "t,a_meas_6,f_true_6\n0,0,0\n0.01,1,2\n0.02,2,4\n");
  io::write_text((dir / "dataset.json").string(), R"({"sequences": [{"file": "rec.csv"}]})");
  io::DatasetInfo info;
  const Dataset ds = io::read_dataset(dir.string(), &info);
  CHECK(ds.split.test == std::vector<std::size_t>{0});
  CHECK(ds.split.train.empty());
  CHECK(info.ids == std::vector<std::string>{"rec"});
  CHECK(info.n_stories == 6);
  CHECK(info.measured_dofs == std::vector<std::size_t>{5});

  io::write_text((dir / "dataset.json").string(), R"({"sequences": [{"file": "rec.csv"}], "split": {"test": ["nope"]}})");
  CHECK(kind_of([&] { io::read_dataset(dir.string()); }) == ErrorKind::Io);
  io::write_text((dir / "dataset.json").string(), "{not json");
  CHECK(kind_of([&] { io::read_dataset(dir.string()); }) == ErrorKind::Io);
  CHECK(kind_of([&] { io::read_dataset((dir / "missing").string()); }) == ErrorKind::Io);
}

TEST_CASE("trace, curve and prediction tables") {
  EstimateTrace tr;
  tr.time = Eigen::VectorXd::LinSpaced(3, 0.0, 0.2);
  tr.u_est = Eigen::MatrixXd::Constant(3, 2, 1.5);
  tr.theta = Eigen::MatrixXd::Constant(3, 4, 900.0);
  tr.z = Eigen::MatrixXd::Constant(3, 4, -0.25);
  tr.innov_norm = Eigen::VectorXd::Constant(3, 0.1);
  tr.rho_norm = Eigen::VectorXd::Constant(3, 0.2);
  const std::string text = io::trace_csv(tr);
  CHECK(text.rfind("t,u_est_1,u_est_2,theta_1,theta_2,theta_3,theta_4,z_1,z_2,z_3,z_4,innov_norm,rho_norm\n", 0) == 0);
  const auto back = io::trace_from_table(io::parse_csv(text));
  CHECK(back.u_est == tr.u_est);
  CHECK(back.theta == tr.theta);
  CHECK(back.z == tr.z);
  CHECK(back.rho_norm == tr.rho_norm);

  const auto c = accumulated_error(Eigen::VectorXd::Constant(2, 2.0), Eigen::VectorXd::Constant(2, 1.0), 1e-3,
                                   Eigen::VectorXd::LinSpaced(2, 0.0, 0.5));
  CHECK(io::error_curve_csv(c) == "t,E,retained\n0,1,1\n0.5,2,1\n");

  const std::vector<std::size_t> dofs{5};
  CHECK(io::prediction_csv(Eigen::VectorXd::LinSpaced(2, 0.0, 1.0), Eigen::MatrixXd::Constant(2, 1, 3.0), dofs) ==
        "t,f_pred_6\n0,3\n1,3\n");
  CHECK(kind_of([&] { io::prediction_csv(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(3, 1), dofs); }) ==
        ErrorKind::Shape);
  CHECK(io::sequence_id(7) == "seq_007");
}
