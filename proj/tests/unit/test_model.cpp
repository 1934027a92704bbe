#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "loadid/error.hpp"
#include "loadid/model.hpp"
#include "support.hpp"

using namespace loadid;
using loadid::test::expm;
using loadid::test::kind_of;

TEST_CASE("six-story matrices have the shear-chain entries") {
  const auto m = build_shear_matrices(ShearBuildingSpec::six_story());
  CHECK(m.K(0, 0) == 1800.0);
  CHECK(m.K(0, 1) == -900.0);
  CHECK(m.K(3, 3) == 2400.0);
  CHECK(m.C(4, 4) == 150.0);
  CHECK(m.M(5, 5) == 100.0);
  // last row follows the symmetric pattern
  CHECK(m.K(5, 5) == 1300.0);
  CHECK(m.K(5, 4) == -1300.0);
  CHECK(m.C(5, 4) == -75.0);
  CHECK(m.K.isApprox(m.K.transpose(), 0.0));
  CHECK(m.C.isApprox(m.C.transpose(), 0.0));
  Eigen::LLT<Eigen::MatrixXd> llt(m.K);
  CHECK(llt.info() == Eigen::Success);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (std::abs(i - j) > 1) CHECK(m.K(i, j) == 0.0);
      if (i != j) CHECK(m.M(i, j) == 0.0);
    }
  }
}

TEST_CASE("single story degenerates to scalars") {
  const auto m = build_shear_matrices({{1.0}, {1.0}, {1.0}});
  CHECK(m.M(0, 0) == 1.0);
  CHECK(m.K(0, 0) == 1.0);
  CHECK(m.C(0, 0) == 1.0);
}

TEST_CASE("two stories match hand assembly") {
  const auto m = build_shear_matrices({{1.0, 2.0}, {3.0, 5.0}, {7.0, 11.0}});
  Eigen::Matrix2d M, K, C;
  M << 1, 0, 0, 2;
  K << 8, -5, -5, 5;
  C << 18, -11, -11, 11;
  CHECK(m.M == Eigen::MatrixXd(M));
  CHECK(m.K == Eigen::MatrixXd(K));
  CHECK(m.C == Eigen::MatrixXd(C));
}

TEST_CASE("invalid specs are rejected") {
  CHECK(kind_of([] { build_shear_matrices({{1.0, 1.0}, {1.0}, {1.0, 1.0}}); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { build_shear_matrices({{1.0}, {-1.0}, {1.0}}); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { build_shear_matrices({{0.0}, {1.0}, {1.0}}); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { build_shear_matrices({{}, {}, {}}); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("state space of a single story") {
  SystemMatrices m;
  m.M = Eigen::MatrixXd::Constant(1, 1, 2.0);
  m.K = Eigen::MatrixXd::Constant(1, 1, 8.0);
  m.C = Eigen::MatrixXd::Constant(1, 1, 4.0);
  const std::vector<std::size_t> dofs{0};
  const auto ss = assemble_state_space(m, dofs);
  Eigen::Matrix2d A;
  A << 0, 1, -4, -2;
  CHECK(ss.A == Eigen::MatrixXd(A));
  CHECK(ss.B(0, 0) == 0.0);
  CHECK(ss.B(1, 0) == 0.5);
}

TEST_CASE("zero restoring forces give a double integrator") {
  SystemMatrices m;
  m.M = Eigen::MatrixXd::Identity(3, 3);
  m.K = Eigen::MatrixXd::Zero(3, 3);
  m.C = Eigen::MatrixXd::Zero(3, 3);
  const std::vector<std::size_t> dofs{1};
  const auto ss = assemble_state_space(m, dofs);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  expected.topRightCorner(3, 3).setIdentity();
  CHECK(ss.A == expected);
}

TEST_CASE("six-story A matches an independent solve") {
  const auto m = build_shear_matrices(ShearBuildingSpec::six_story());
  const auto dofs = all_dofs(6);
  const auto ss = assemble_state_space(m, dofs);
  const Eigen::MatrixXd expected = -(m.M.inverse() * m.K);
  CHECK((ss.A.bottomLeftCorner(6, 6) - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ss.B.topRows(6).isZero(0.0));
  CHECK(ss.input_dofs == dofs);
}

TEST_CASE("state space errors") {
  SystemMatrices m = build_shear_matrices(ShearBuildingSpec::six_story());
  const std::vector<std::size_t> bad{6};
  CHECK(kind_of([&] { assemble_state_space(m, bad); }) == ErrorKind::InvalidDof);
  m.M(2, 2) = 0.0;
  const std::vector<std::size_t> ok{5};
  CHECK(kind_of([&] { assemble_state_space(m, ok); }) == ErrorKind::SingularMass);
}

TEST_CASE("B has zeros in the displacement rows for every input map") {
  const auto m = build_shear_matrices(ShearBuildingSpec::six_story());
  for (std::size_t d = 0; d < 6; ++d) {
    const std::vector<std::size_t> dofs{d};
    const auto ss = assemble_state_space(m, dofs);
    CHECK(ss.B.topRows(6).isZero(0.0));
    CHECK(ss.B(6 + static_cast<Eigen::Index>(d), 0) == doctest::Approx(0.01));
  }
}

TEST_CASE("discretize zero dynamics and scalar truncation") {
  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(2, 2);
  ss.B = Eigen::MatrixXd::Ones(2, 1);
  const auto d = discretize(ss, 0.1);
  CHECK(d.A_d == Eigen::MatrixXd::Identity(2, 2));
  CHECK(d.B_d == 0.1 * ss.B);
  CHECK(d.dt == 0.1);

  ss.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  ss.B = Eigen::MatrixXd::Ones(1, 1);
  const auto s = discretize(ss, 0.01);
  CHECK(s.A_d(0, 0) == doctest::Approx(0.99005).epsilon(1e-15));
  CHECK(std::abs(s.A_d(0, 0) - std::exp(-0.01)) < 2e-7);
}

TEST_CASE("discretize rejects non-positive steps") {
  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(2, 2);
  ss.B = Eigen::MatrixXd::Zero(2, 1);
  CHECK(kind_of([&] { discretize(ss, 0.0); }) == ErrorKind::InvalidStep);
  CHECK(kind_of([&] { discretize(ss, -0.01); }) == ErrorKind::InvalidStep);
}

TEST_CASE("truncation error is third order in dt") {
  const auto m = build_shear_matrices(ShearBuildingSpec::six_story());
  const std::vector<std::size_t> dofs{5};
  const auto ss = assemble_state_space(m, dofs);
  auto err = [&](double dt) {
    return (discretize(ss, dt).A_d - expm(ss.A * dt)).cwiseAbs().maxCoeff();
  };
  const double e1 = err(0.01), e2 = err(0.005);
  const double a3 = (ss.A * ss.A * ss.A).cwiseAbs().maxCoeff();
  CHECK(e1 <= a3 * 1e-6 / 6.0 * 1.1);
  CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("theta round trip and targeted changes") {
  const auto spec = ShearBuildingSpec::six_story();
  const auto theta = theta_of(spec);
  REQUIRE(theta.theta.size() == 12);
  CHECK(theta.stiffness(3) == 1100.0);
  CHECK(theta.damping(5) == 75.0);
  const auto a = build_shear_matrices(spec);
  const auto b = matrices_from_theta(theta, spec);
  CHECK(a.M == b.M);
  CHECK(a.K == b.K);
  CHECK(a.C == b.C);

  auto scaled = theta;
  scaled.theta(3) *= 1.1;
  const auto c = matrices_from_theta(scaled, spec);
  const Eigen::MatrixXd diff = c.K - a.K;
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      const bool inside = (i == 2 || i == 3) && (j == 2 || j == 3);
      if (!inside) CHECK(diff(i, j) == 0.0);
    }
  }
  CHECK(diff(3, 3) == doctest::Approx(110.0));
  CHECK(diff(2, 3) == doctest::Approx(-110.0));
  CHECK(c.C == a.C);
  CHECK(c.M == a.M);
}

TEST_CASE("theta of ones on a two-story template") {
  const ShearBuildingSpec tmpl{{3.0, 4.0}, {10.0, 20.0}, {1.0, 2.0}};
  ParameterVector p;
  p.theta = Eigen::VectorXd::Ones(4);
  const auto m = matrices_from_theta(p, tmpl);
  Eigen::Matrix2d K;
  K << 2, -1, -1, 1;
  CHECK(m.K == Eigen::MatrixXd(K));
  CHECK(m.C == Eigen::MatrixXd(K));
  CHECK(m.M(0, 0) == 3.0);
  CHECK(m.M(1, 1) == 4.0);
}

TEST_CASE("invalid theta is rejected") {
  const auto spec = ShearBuildingSpec::six_story();
  auto theta = theta_of(spec);
  theta.theta(7) = -1.0;
  CHECK(kind_of([&] { matrices_from_theta(theta, spec); }) == ErrorKind::InvalidParameter);
  ParameterVector short_theta;
  short_theta.theta = Eigen::VectorXd::Ones(5);
  CHECK(kind_of([&] { matrices_from_theta(short_theta, spec); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("random passive specs have stable A") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::uniform_int_distribution<int> n_dist(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = n_dist(rng);
    ShearBuildingSpec spec;
    for (int i = 0; i < n; ++i) {
      spec.masses.push_back(u(rng));
      spec.stiffnesses.push_back(100.0 * u(rng));
      spec.dampings.push_back(u(rng));
    }
    const auto m = build_shear_matrices(spec);
    const std::vector<std::size_t> dofs{0};
    const auto ss = assemble_state_space(m, dofs);
    Eigen::EigenSolver<Eigen::MatrixXd> es(ss.A);
    CHECK(es.eigenvalues().real().maxCoeff() <= 1e-9);
    CHECK(ss.B.topRows(n).isZero(0.0));
  }
}
