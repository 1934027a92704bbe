#include "loadid/rkf.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "loadid/error.hpp"

namespace loadid {

void FilterConfig::validate(std::size_t n) const {
  if (!(q_scale > 0.0) || !(r_scale > 0.0) || !(p0_scale > 0.0)) {
    throw Error(ErrorKind::Config, "q_scale, r_scale and p0_scale must be > 0");
  }
  if (!(lambda2 >= 0.0)) throw Error(ErrorKind::Config, "lambda2 must be >= 0");
  if (!(mu >= 0.0)) throw Error(ErrorKind::Config, "mu must be >= 0");
  if (!(fd_step > 0.0 && fd_step <= 1e-2)) throw Error(ErrorKind::Config, "fd_step must lie in (0, 1e-2]");
  if (theta0.theta.size() != 0 && theta0.theta.size() != static_cast<Eigen::Index>(2 * n)) {
    throw Error(ErrorKind::Config, "theta0 must have length 2*n_stories");
  }
  if (z0.size() != 0 && z0.size() != static_cast<Eigen::Index>(2 * n)) {
    throw Error(ErrorKind::Config, "z0 must have length 2*n_stories");
  }
  if (!known_inputs.empty() && known_inputs.size() != n) {
    throw Error(ErrorKind::Config, "known_inputs must have one entry per DOF");
  }
  if (known_values.size() != 0 && known_values.size() != static_cast<Eigen::Index>(n)) {
    throw Error(ErrorKind::Config, "known_values must have one entry per DOF");
  }
  if (!(detrend_hz >= 0.0)) throw Error(ErrorKind::Config, "detrend_hz must be >= 0");
}

ParameterVector FilterConfig::initial_theta(const ShearBuildingSpec& tmpl) const {
  if (theta0.theta.size() != 0) return theta0;
  ParameterVector p = theta_of(tmpl);
  p.theta *= (1.0 + theta0_offset);
  return p;
}

std::vector<bool> FilterConfig::all_known_except(std::size_t n, const std::vector<std::size_t>& unknown) {
  std::vector<bool> known(n, true);
  for (std::size_t d : unknown) {
    if (d < n) known[d] = false;
  }
  return known;
}

Prediction predict(const FilterState& state, const DiscreteStateSpace& dss, const Eigen::MatrixXd& Q_d) {
  Prediction p;
  p.z = dss.A_d * state.z + dss.B_d * state.u_est;
  const Eigen::MatrixXd P = dss.A_d * state.P * dss.A_d.transpose() + Q_d;
  p.P = 0.5 * (P + P.transpose());
  return p;
}

Gain gain(const Eigen::MatrixXd& P_pred, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R_d) {
  Gain g;
  g.N = H * P_pred * H.transpose() + R_d;
  const Eigen::MatrixXd PHt = P_pred * H.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g.N);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  const double cond = d.size() ? d.maxCoeff() / d.minCoeff() : 1.0;
  if (ldlt.info() != Eigen::Success || !std::isfinite(cond) || cond > 1e15 || d.minCoeff() == 0.0) {
    throw Error(ErrorKind::IllConditioned,
                "pre-fit residual covariance is singular (condition estimate " + std::to_string(cond) + ")");
  }
  // J = P H^T N^-1  <=>  N J^T = H P^T (N and P symmetric)
  g.J = ldlt.solve(PHt.transpose()).transpose();
  return g;
}

Posterior update_state(const Eigen::VectorXd& z_pred, const Eigen::MatrixXd& P_pred,
                       const Eigen::VectorXd& y, const Eigen::MatrixXd& H, const Eigen::MatrixXd& J) {
  if (y.size() != H.rows()) throw Error(ErrorKind::Shape, "observation length must equal rows(H)");
  Posterior post;
  post.z = z_pred + J * (y - H * z_pred);
  const Eigen::Index m = P_pred.rows();
  const Eigen::MatrixXd P = (Eigen::MatrixXd::Identity(m, m) - J * H) * P_pred;
  post.P = 0.5 * (P + P.transpose());
  return post;
}

Eigen::VectorXd estimate_input(const Eigen::VectorXd& a_full, const Eigen::VectorXd& z_post,
                               const SystemMatrices& mats, const std::vector<bool>& known,
                               const Eigen::VectorXd& known_values) {
  const Eigen::Index n = mats.dofs();
  Eigen::VectorXd u = mats.M * a_full + mats.K * z_post.head(n) + mats.C * z_post.tail(n);
  for (std::size_t i = 0; i < known.size(); ++i) {
    if (known[i]) u(static_cast<Eigen::Index>(i)) = known_values.size() ? known_values(static_cast<Eigen::Index>(i)) : 0.0;
  }
  return u;
}

Eigen::VectorXd estimate_input(const Eigen::VectorXd& a_full, const Eigen::VectorXd& z_post,
                               const ParameterVector& theta, const ShearBuildingSpec& tmpl,
                               const std::vector<bool>& known, const Eigen::VectorXd& known_values) {
  return estimate_input(a_full, z_post, matrices_from_theta(theta, tmpl), known, known_values);
}

Eigen::VectorXd estimated_accelerations(const Eigen::VectorXd& z_post, const Eigen::VectorXd& u_est,
                                        const SystemMatrices& mats) {
  const Eigen::Index n = mats.dofs();
  const Eigen::VectorXd rhs = u_est - mats.K * z_post.head(n) - mats.C * z_post.tail(n);
  if (mats.M.isDiagonal()) return rhs.cwiseQuotient(mats.M.diagonal());
  return mats.M.partialPivLu().solve(rhs);
}

Eigen::MatrixXd sensitivity(const AccelerationPredictor& a_pred, const Eigen::VectorXd& theta,
                            double fd_step) {
  if (!(fd_step > 0.0)) throw Error(ErrorKind::InvalidParameter, "fd_step must be > 0");
  Eigen::MatrixXd U;
  Eigen::VectorXd probe = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = fd_step * std::max(std::abs(theta(j)), 1.0);
    probe(j) = theta(j) + h;
    const Eigen::VectorXd plus = a_pred(probe);
    probe(j) = theta(j) - h;
    const Eigen::VectorXd minus = a_pred(probe);
    probe(j) = theta(j);
    if (!plus.allFinite() || !minus.allFinite()) {
      throw Error(ErrorKind::SensitivityFailure,
                  "non-finite predictor response for parameter " + std::to_string(j));
    }
    if (U.size() == 0) U.resize(plus.size(), theta.size());
    U.col(j) = -(plus - minus) / (2.0 * h);
  }
  return U;
}

Eigen::VectorXd update_parameters(const Eigen::VectorXd& theta, const Eigen::MatrixXd& U,
                                  const Eigen::VectorXd& residual, double rho_norm, double lambda2,
                                  double mu, const Eigen::VectorXd& floor) {
  if (residual.isZero(0.0)) return theta;
  const Eigen::Index p = theta.size();
  Eigen::MatrixXd normal = U.transpose() * U;
  normal.diagonal().array() += lambda2;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  const double scale = std::max(d.maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-14 * scale) {
    throw Error(ErrorKind::RegularizationRequired,
                "normal matrix U^T U is singular; lambda2 > 0 is required");
  }
  const Eigen::VectorXd delta = ldlt.solve(U.transpose() * residual);
  const double factor = rho_norm == 0.0 ? 1.0 : std::exp(-mu * rho_norm);
  Eigen::VectorXd out = theta + factor * delta;
  if (floor.size() == p) out = out.cwiseMax(floor);
  return out;
}

// ---------------------------------------------------------------------------

FilterModel::FilterModel(const ShearBuildingSpec& tmpl, const FilterConfig& config, double dt,
                         std::vector<std::size_t> measured_dofs)
    : tmpl_(tmpl), config_(config), dt_(dt), measured_(std::move(measured_dofs)) {
  tmpl_.validate();
  n_ = static_cast<Eigen::Index>(tmpl_.n_stories());
  config_.validate(tmpl_.n_stories());
  if (!(dt_ > 0.0)) throw Error(ErrorKind::InvalidStep, "dt must be positive");
  for (std::size_t d : measured_) {
    if (d >= tmpl_.n_stories()) throw Error(ErrorKind::InvalidDof, "measured dof out of range");
  }
  const Eigen::Index m = 2 * n_;
  H_ = Eigen::MatrixXd::Identity(m, m);
  Q_d_ = config_.q_scale * Eigen::MatrixXd::Identity(m, m);
  R_d_ = config_.r_scale * Eigen::MatrixXd::Identity(m, m);
  known_ = config_.known_inputs.empty() ? std::vector<bool>(tmpl_.n_stories(), false) : config_.known_inputs;
  known_values_ = config_.known_values.size() ? config_.known_values : Eigen::VectorXd::Zero(n_);
  all_inputs_ = all_dofs(tmpl_.n_stories());
  const ParameterVector theta0 = config_.initial_theta(tmpl_);
  theta_floor_ = config_.theta_floor * theta0.theta.cwiseAbs();
  set_theta(theta0);
}

void FilterModel::set_theta(const ParameterVector& theta) {
  mats_ = matrices_from_theta(theta, tmpl_);
  dss_ = discretize(assemble_state_space(mats_, all_inputs_), dt_);
}

FilterState FilterModel::initial_state(const Eigen::VectorXd& a_meas0) {
  FilterState s;
  const Eigen::Index m = 2 * n_;
  s.theta = config_.initial_theta(tmpl_);
  set_theta(s.theta);
  s.z = config_.z0.size() ? config_.z0 : Eigen::VectorXd::Zero(m);
  s.P = config_.p0_scale * Eigen::MatrixXd::Identity(m, m);
  s.k = 0;
  // Unmeasured channels have no estimate yet at t0; they start from the
  // acceleration implied by z0 with a zero input.
  Eigen::VectorXd a_full = estimated_accelerations(s.z, Eigen::VectorXd::Zero(n_), mats_);
  for (std::size_t j = 0; j < measured_.size(); ++j) {
    a_full(static_cast<Eigen::Index>(measured_[j])) = a_meas0(static_cast<Eigen::Index>(j));
  }
  s.u_est = estimate_input(a_full, s.z, mats_, known_, known_values_);
  s.a_est = estimated_accelerations(s.z, s.u_est, mats_);
  s.accel_prev = a_full;
  s.pseudo_disp = s.z.head(n_);
  s.pseudo_vel = s.z.tail(n_);
  return s;
}

FilterState rkf_step(const FilterState& state, const Eigen::VectorXd& a_meas, FilterModel& model) {
  const Eigen::Index n = model.dofs();
  const FilterConfig& cfg = model.config();
  const double dt = model.dt();
  if (a_meas.size() != static_cast<Eigen::Index>(model.measured_dofs().size())) {
    throw Error(ErrorKind::Shape, "acceleration frame does not match the measured DOFs");
  }

  // (1) unmeasured channels take the previous step's estimated accelerations
  Eigen::VectorXd a_full = state.a_est;
  for (std::size_t j = 0; j < model.measured_dofs().size(); ++j) {
    a_full(static_cast<Eigen::Index>(model.measured_dofs()[j])) = a_meas(static_cast<Eigen::Index>(j));
  }

  // (2) trapezoid pseudo-measurements
  FilterState next;
  const double leak = cfg.detrend_hz > 0.0 ? std::exp(-2.0 * std::numbers::pi * cfg.detrend_hz * dt) : 1.0;
  next.pseudo_vel = leak * (state.pseudo_vel + 0.5 * dt * (state.accel_prev + a_full));
  next.pseudo_disp = leak * (state.pseudo_disp + 0.5 * dt * (state.pseudo_vel + next.pseudo_vel));
  next.accel_prev = a_full;
  Eigen::VectorXd y(2 * n);
  y << next.pseudo_disp, next.pseudo_vel;

  // (3)-(4) Kalman predict and update
  const Prediction pred = predict(state, model.dss(), model.Q_d());
  const Gain g = gain(pred.P, model.H(), model.R_d());
  next.innov_norm = (y - model.H() * pred.z).norm();
  const Posterior post = update_state(pred.z, pred.P, y, model.H(), g.J);
  next.z = post.z;
  next.P = post.P;

  // (5)-(6) input recovery and accelerations with the prior-step parameters
  const SystemMatrices& mats = model.matrices();
  next.u_est = estimate_input(a_full, next.z, mats, model.known(), model.known_values());
  next.a_est = estimated_accelerations(next.z, next.u_est, mats);

  // (7) residual of the system model on the known-input rows
  const Eigen::VectorXd g_model = mats.M * a_full + mats.K * next.z.head(n) + mats.C * next.z.tail(n);
  const Eigen::VectorXd rho = next.u_est - g_model;
  next.rho_norm = rho.norm();

  next.theta = state.theta;
  if (!rho.isZero(0.0) && std::isfinite(cfg.mu)) {
    const ShearBuildingSpec& tmpl = model.tmpl();
    const std::vector<bool>& known = model.known();
    const Eigen::VectorXd& known_values = model.known_values();
    const Eigen::VectorXd z_post = next.z;
    auto a_pred = [&](const Eigen::VectorXd& theta) {
      const SystemMatrices m = matrices_from_theta(ParameterVector{theta}, tmpl);
      const Eigen::VectorXd u = estimate_input(a_full, z_post, m, known, known_values);
      return estimated_accelerations(z_post, u, m);
    };
    const Eigen::MatrixXd U = sensitivity(a_pred, state.theta.theta, cfg.fd_step);
    next.theta.theta = update_parameters(state.theta.theta, U, rho, next.rho_norm, cfg.lambda2,
                                         cfg.mu, model.theta_floor());
    // (8) rebuild the discrete model for the next step
    model.set_theta(next.theta);
  }

  next.k = state.k + 1;
  if (!next.z.allFinite() || !next.u_est.allFinite() || !next.theta.theta.allFinite()) {
    throw DivergenceError("filter state became non-finite", next.k);
  }
  return next;
}

EstimateTrace run_rkf(const MeasurementSet& meas, const FilterConfig& config,
                      const ShearBuildingSpec& tmpl) {
  const Eigen::Index T = meas.samples();
  if (T < 2) throw Error(ErrorKind::InvalidLength, "measurement record needs at least two samples");
  FilterModel model(tmpl, config, meas.dt(), meas.measured_dofs);
  const Eigen::Index n = model.dofs();

  EstimateTrace tr;
  tr.time = meas.time;
  tr.u_est.resize(T, n);
  tr.theta.resize(T, 2 * n);
  tr.z.resize(T, 2 * n);
  tr.innov_norm.resize(T);
  tr.rho_norm.resize(T);
  auto record = [&](Eigen::Index k, const FilterState& s) {
    tr.u_est.row(k) = s.u_est.transpose();
    tr.theta.row(k) = s.theta.theta.transpose();
    tr.z.row(k) = s.z.transpose();
    tr.innov_norm(k) = s.innov_norm;
    tr.rho_norm(k) = s.rho_norm;
  };

  FilterState s = model.initial_state(meas.noisy_accel.row(0).transpose());
  record(0, s);
  for (Eigen::Index k = 1; k < T; ++k) {
    try {
      s = rkf_step(s, meas.noisy_accel.row(k).transpose(), model);
    } catch (const DivergenceError&) {
      throw;
    } catch (const Error& e) {
      throw Error(e.kind(), e.message() + " (step " + std::to_string(k) + ")");
    }
    record(k, s);
  }
  return tr;
}

}  // namespace loadid
