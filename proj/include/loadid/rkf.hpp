#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "loadid/model.hpp"
#include "loadid/simulate.hpp"

namespace loadid {

/// Residual-based Kalman filter for joint input, parameter and state
/// estimation of a shear chain from (possibly partial) acceleration
/// measurements.
///
/// Each step integrates the acceleration frame into displacement/velocity
/// pseudo-measurements, runs a Kalman predict/update on z = [y; y'],
/// recovers the input algebraically through the equations of motion and
/// applies a damped, regularized Gauss-Newton correction to theta.
struct FilterConfig {
  double q_scale = 1.0;       // Q_d = q_scale * I
  double r_scale = 1e-10;     // R_d = r_scale * I
  double lambda2 = 5e-2;
  double mu = 5e-3;           // +inf freezes theta
  ParameterVector theta0;     // empty: true template values scaled by theta0_offset
  double theta0_offset = 0.3; // relative offset applied when theta0 is empty
  Eigen::VectorXd z0;         // empty: zero
  double p0_scale = 1.0;
  double fd_step = 1e-6;
  std::vector<bool> known_inputs;  // per DOF; empty: none known
  Eigen::VectorXd known_values;    // per DOF; empty: zeros
  double theta_floor = 1e-6;       // fraction of |theta0| below which theta is clamped
  double detrend_hz = 0.0;         // > 0 enables a leaky (high-pass) pseudo-measurement integrator

  void validate(std::size_t n_stories) const;

  /// theta0 if set, else the template values times (1 + theta0_offset).
  ParameterVector initial_theta(const ShearBuildingSpec& tmpl) const;

  /// Known-input mask with every DOF except `unknown` marked known-zero.
  static std::vector<bool> all_known_except(std::size_t n, const std::vector<std::size_t>& unknown);
};

struct FilterState {
  Eigen::VectorXd z;        // [y; y']
  Eigen::MatrixXd P;
  ParameterVector theta;
  Eigen::VectorXd u_est;    // n
  Eigen::VectorXd a_est;    // n
  long k = 0;

  // online pseudo-measurement integrators
  Eigen::VectorXd accel_prev;  // full acceleration frame of step k
  Eigen::VectorXd pseudo_disp;
  Eigen::VectorXd pseudo_vel;

  double innov_norm = 0.0;
  double rho_norm = 0.0;
};

struct EstimateTrace {
  Eigen::VectorXd time;
  Eigen::MatrixXd u_est;      // T x n
  Eigen::MatrixXd theta;      // T x 2n
  Eigen::MatrixXd z;          // T x 2n
  Eigen::VectorXd innov_norm; // T
  Eigen::VectorXd rho_norm;   // T
};

struct Prediction {
  Eigen::VectorXd z;
  Eigen::MatrixXd P;
};

struct Gain {
  Eigen::MatrixXd J;
  Eigen::MatrixXd N;
};

struct Posterior {
  Eigen::VectorXd z;
  Eigen::MatrixXd P;
};

/// z- = A_d z + B_d u (prior input), P- = A_d P A_d^T + Q_d.
Prediction predict(const FilterState& state, const DiscreteStateSpace& dss, const Eigen::MatrixXd& Q_d);

/// J = P- H^T N^-1 with N = H P- H^T + R_d, via a Cholesky/LU solve.
Gain gain(const Eigen::MatrixXd& P_pred, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R_d);

Posterior update_state(const Eigen::VectorXd& z_pred, const Eigen::MatrixXd& P_pred,
                       const Eigen::VectorXd& y, const Eigen::MatrixXd& H, const Eigen::MatrixXd& J);

/// u = M a + K y + C y'; rows flagged in `known` take `known_values`.
Eigen::VectorXd estimate_input(const Eigen::VectorXd& a_full, const Eigen::VectorXd& z_post,
                               const SystemMatrices& mats, const std::vector<bool>& known,
                               const Eigen::VectorXd& known_values);

Eigen::VectorXd estimate_input(const Eigen::VectorXd& a_full, const Eigen::VectorXd& z_post,
                               const ParameterVector& theta, const ShearBuildingSpec& tmpl,
                               const std::vector<bool>& known, const Eigen::VectorXd& known_values);

/// a = M^-1 (u - K y - C y').
Eigen::VectorXd estimated_accelerations(const Eigen::VectorXd& z_post, const Eigen::VectorXd& u_est,
                                        const SystemMatrices& mats);

using AccelerationPredictor = std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)>;

/// U = -d a_pred / d theta by central differences; column j perturbs theta_j
/// by fd_step * max(|theta_j|, 1).
Eigen::MatrixXd sensitivity(const AccelerationPredictor& a_pred, const Eigen::VectorXd& theta,
                            double fd_step);

/// delta = (U^T U + lambda2 I)^-1 U^T residual; theta + delta * exp(-mu |rho|_2),
/// clamped below by `floor` (per entry, may be empty).
Eigen::VectorXd update_parameters(const Eigen::VectorXd& theta, const Eigen::MatrixXd& U,
                                  const Eigen::VectorXd& residual, double rho_norm, double lambda2,
                                  double mu, const Eigen::VectorXd& floor = {});

/// Fixed pieces of a filter run: template, mass matrix, observation and
/// noise matrices.
class FilterModel {
 public:
  FilterModel(const ShearBuildingSpec& tmpl, const FilterConfig& config, double dt,
              std::vector<std::size_t> measured_dofs);

  const ShearBuildingSpec& tmpl() const { return tmpl_; }
  const FilterConfig& config() const { return config_; }
  double dt() const { return dt_; }
  Eigen::Index dofs() const { return n_; }
  const std::vector<std::size_t>& measured_dofs() const { return measured_; }
  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::MatrixXd& Q_d() const { return Q_d_; }
  const Eigen::MatrixXd& R_d() const { return R_d_; }
  const std::vector<bool>& known() const { return known_; }
  const Eigen::VectorXd& known_values() const { return known_values_; }
  const Eigen::VectorXd& theta_floor() const { return theta_floor_; }

  /// Current system matrices and discretization for theta (cached).
  const SystemMatrices& matrices() const { return mats_; }
  const DiscreteStateSpace& dss() const { return dss_; }
  void set_theta(const ParameterVector& theta);

  FilterState initial_state(const Eigen::VectorXd& a_meas0);

 private:
  ShearBuildingSpec tmpl_;
  FilterConfig config_;
  double dt_;
  Eigen::Index n_;
  std::vector<std::size_t> measured_;
  Eigen::MatrixXd H_, Q_d_, R_d_;
  std::vector<bool> known_;
  Eigen::VectorXd known_values_;
  Eigen::VectorXd theta_floor_;
  SystemMatrices mats_;
  DiscreteStateSpace dss_;
  std::vector<std::size_t> all_inputs_;
};

/// One filter recursion from step k to k+1 given the measured accelerations
/// (ordered as model.measured_dofs()) at k+1. Updates model's cached theta.
FilterState rkf_step(const FilterState& state, const Eigen::VectorXd& a_meas, FilterModel& model);

/// Strictly causal single pass over the record.
EstimateTrace run_rkf(const MeasurementSet& meas, const FilterConfig& config,
                      const ShearBuildingSpec& tmpl);

}  // namespace loadid
