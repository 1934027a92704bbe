#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace loadid {

/// Lumped-mass shear chain. Story i is connected to story i-1 (or the
/// ground for i = 0) by stiffness k_i and damping c_i.
struct ShearBuildingSpec {
  std::vector<double> masses;       // [kg]
  std::vector<double> stiffnesses;  // [N/m]
  std::vector<double> dampings;     // [N s/m]

  std::size_t n_stories() const { return masses.size(); }

  /// Throws Error(InvalidSpec) on non-positive entries or length mismatch.
  void validate() const;

  /// The six-story benchmark: m_i = 100, k = [900,900,1100,1100,1300,1300],
  /// c = [25,25,50,50,75,75].
  static ShearBuildingSpec six_story();
};

struct SystemMatrices {
  Eigen::MatrixXd M;
  Eigen::MatrixXd C;
  Eigen::MatrixXd K;

  Eigen::Index dofs() const { return M.rows(); }
};

/// First-order form  z' = A z + B u  with z = [y; y'].
struct StateSpace {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<std::size_t> input_dofs;
};

struct DiscreteStateSpace {
  Eigen::MatrixXd A_d;
  Eigen::MatrixXd B_d;
  double dt = 0.0;
};

/// Ordered [k_1..k_n, c_1..c_n].
struct ParameterVector {
  Eigen::VectorXd theta;

  Eigen::Index n_stories() const { return theta.size() / 2; }
  double stiffness(Eigen::Index i) const { return theta(i); }
  double damping(Eigen::Index i) const { return theta(n_stories() + i); }
};

SystemMatrices build_shear_matrices(const ShearBuildingSpec& spec);

/// B = [0; M^-1 S] where S holds the identity columns listed in input_dofs.
StateSpace assemble_state_space(const SystemMatrices& mats,
                                std::span<const std::size_t> input_dofs);

/// Second-order truncated exponential: A_d = I + dt A + dt^2/2 A^2, B_d = dt B.
DiscreteStateSpace discretize(const StateSpace& ss, double dt);

ParameterVector theta_of(const ShearBuildingSpec& spec);

/// Shear matrices for the template's masses and theta's stiffness/damping.
SystemMatrices matrices_from_theta(const ParameterVector& theta,
                                   const ShearBuildingSpec& tmpl);

/// All DOF indices 0..n-1.
std::vector<std::size_t> all_dofs(std::size_t n);

}  // namespace loadid
