#include "loadid/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "loadid/error.hpp"

namespace loadid {

namespace {

bool all_positive(const std::vector<double>& v) {
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) return false;
  }
  return true;
}

// Shear-chain assembly shared by K and C: diagonal e_i + e_{i+1}, last
// diagonal e_n, off-diagonals -e_{i+1}.
Eigen::MatrixXd chain_matrix(const double* e, Eigen::Index n) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) += e[i];
    if (i > 0) {
      out(i - 1, i - 1) += e[i];
      out(i - 1, i) = -e[i];
      out(i, i - 1) = -e[i];
    }
  }
  return out;
}

}  // namespace

void ShearBuildingSpec::validate() const {
  const std::size_t n = masses.size();
  if (n == 0) throw Error(ErrorKind::InvalidSpec, "n_stories must be positive");
  if (stiffnesses.size() != n || dampings.size() != n) {
    throw Error(ErrorKind::InvalidSpec,
                "masses/stiffnesses/dampings must all have length " + std::to_string(n));
  }
  if (!all_positive(masses) || !all_positive(stiffnesses) || !all_positive(dampings)) {
    throw Error(ErrorKind::InvalidSpec, "all masses, stiffnesses and dampings must be > 0");
  }
}

ShearBuildingSpec ShearBuildingSpec::six_story() {
  return ShearBuildingSpec{
      .masses = {100, 100, 100, 100, 100, 100},
      .stiffnesses = {900, 900, 1100, 1100, 1300, 1300},
      .dampings = {25, 25, 50, 50, 75, 75},
  };
}

SystemMatrices build_shear_matrices(const ShearBuildingSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n_stories());
  SystemMatrices out;
  out.M = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) out.M(i, i) = spec.masses[i];
  out.K = chain_matrix(spec.stiffnesses.data(), n);
  out.C = chain_matrix(spec.dampings.data(), n);
  return out;
}

StateSpace assemble_state_space(const SystemMatrices& mats,
                                std::span<const std::size_t> input_dofs) {
  const Eigen::Index n = mats.dofs();
  for (std::size_t d : input_dofs) {
    if (d >= static_cast<std::size_t>(n)) {
      throw Error(ErrorKind::InvalidDof, "input dof " + std::to_string(d) + " out of range");
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(mats.M);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularMass, "mass matrix is singular");

  const Eigen::MatrixXd minv_k = lu.solve(mats.K);
  const Eigen::MatrixXd minv_c = lu.solve(mats.C);

  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ss.A.topRightCorner(n, n).setIdentity();
  ss.A.bottomLeftCorner(n, n) = -minv_k;
  ss.A.bottomRightCorner(n, n) = -minv_c;

  Eigen::MatrixXd select = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(input_dofs.size()));
  for (std::size_t j = 0; j < input_dofs.size(); ++j) {
    select(static_cast<Eigen::Index>(input_dofs[j]), static_cast<Eigen::Index>(j)) = 1.0;
  }
  ss.B = Eigen::MatrixXd::Zero(2 * n, select.cols());
  ss.B.bottomRows(n) = lu.solve(select);
  ss.input_dofs.assign(input_dofs.begin(), input_dofs.end());
  return ss;
}

DiscreteStateSpace discretize(const StateSpace& ss, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::InvalidStep, "dt must be positive, got " + std::to_string(dt));
  }
  const Eigen::Index m = ss.A.rows();
  DiscreteStateSpace d;
  d.A_d = Eigen::MatrixXd::Identity(m, m) + dt * ss.A + (0.5 * dt * dt) * (ss.A * ss.A);
  d.B_d = dt * ss.B;
  d.dt = dt;
  return d;
}

ParameterVector theta_of(const ShearBuildingSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n_stories());
  ParameterVector p;
  p.theta.resize(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.theta(i) = spec.stiffnesses[i];
    p.theta(n + i) = spec.dampings[i];
  }
  return p;
}

SystemMatrices matrices_from_theta(const ParameterVector& theta, const ShearBuildingSpec& tmpl) {
  const auto n = static_cast<Eigen::Index>(tmpl.n_stories());
  if (theta.theta.size() != 2 * n) {
    throw Error(ErrorKind::InvalidParameter,
                "theta length " + std::to_string(theta.theta.size()) + " != 2*n_stories");
  }
  for (Eigen::Index j = 0; j < theta.theta.size(); ++j) {
    if (!(theta.theta(j) > 0.0) || !std::isfinite(theta.theta(j))) {
      throw Error(ErrorKind::InvalidParameter, "theta[" + std::to_string(j) + "] must be > 0");
    }
  }
  ShearBuildingSpec spec = tmpl;
  for (Eigen::Index i = 0; i < n; ++i) {
    spec.stiffnesses[i] = theta.theta(i);
    spec.dampings[i] = theta.theta(n + i);
  }
  return build_shear_matrices(spec);
}

std::vector<std::size_t> all_dofs(std::size_t n) {
  std::vector<std::size_t> d(n);
  std::iota(d.begin(), d.end(), std::size_t{0});
  return d;
}

}  // namespace loadid
