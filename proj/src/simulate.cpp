#include "loadid/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "loadid/error.hpp"
#include "loadid/parallel.hpp"
#include "loadid/rng.hpp"

namespace loadid {

std::string to_string(LoadKind kind) {
  switch (kind) {
    case LoadKind::Harmonic: return "harmonic";
    case LoadKind::Base: return "base";
    case LoadKind::Impulse: return "impulse";
  }
  return "unknown";
}

LoadKind load_kind_from_string(const std::string& s) {
  if (s == "harmonic") return LoadKind::Harmonic;
  if (s == "base") return LoadKind::Base;
  if (s == "impulse") return LoadKind::Impulse;
  throw Error(ErrorKind::Config, "unknown load kind '" + s + "'");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Shaker: return "shaker";
    case ScenarioKind::Base: return "base";
    case ScenarioKind::Impact: return "impact";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "shaker") return ScenarioKind::Shaker;
  if (s == "base") return ScenarioKind::Base;
  if (s == "impact") return ScenarioKind::Impact;
  throw Error(ErrorKind::Config, "unknown scenario '" + s + "'");
}

Eigen::VectorXd uniform_grid(double duration, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::InvalidStep, "dt must be positive");
  }
  if (!(duration >= 0.0)) throw Error(ErrorKind::InvalidStep, "duration must be >= 0");
  const auto steps = static_cast<Eigen::Index>(std::llround(duration / dt));
  Eigen::VectorXd t(steps + 1);
  for (Eigen::Index k = 0; k <= steps; ++k) t(k) = static_cast<double>(k) * dt;
  return t;
}

namespace {

void check_dof(std::size_t dof, std::size_t n) {
  if (dof >= n) {
    throw Error(ErrorKind::InvalidDof,
                "dof " + std::to_string(dof) + " out of range for " + std::to_string(n) + " stories");
  }
}

double column_rms(const Eigen::MatrixXd& m, Eigen::Index col) {
  if (m.rows() == 0) return 0.0;
  return std::sqrt(m.col(col).squaredNorm() / static_cast<double>(m.rows()));
}

}  // namespace

LoadSignal gen_decaying_harmonic(double amplitude, double omega, double decay, double onset,
                                 double duration, double dt, std::size_t dof, std::size_t n) {
  check_dof(dof, n);
  if (!(onset < duration)) throw Error(ErrorKind::InvalidScenario, "onset must precede duration");
  if (!(decay >= 0.0)) throw Error(ErrorKind::InvalidScenario, "decay must be >= 0");

  LoadSignal s;
  s.time = uniform_grid(duration, dt);
  s.forces = Eigen::MatrixXd::Zero(s.time.size(), static_cast<Eigen::Index>(n));
  const auto col = static_cast<Eigen::Index>(dof);
  for (Eigen::Index k = 0; k < s.time.size(); ++k) {
    const double tau = s.time(k) - onset;
    if (tau < 0.0) continue;
    s.forces(k, col) = amplitude * std::exp(-decay * tau) * std::sin(omega * tau);
  }
  s.descriptor.kind = LoadKind::Harmonic;
  s.descriptor.parameters = {{"amplitude", amplitude}, {"omega", omega}, {"decay", decay},
                             {"onset", onset},         {"duration", duration}, {"dt", dt},
                             {"dof", static_cast<double>(dof)}};
  return s;
}

LoadSignal gen_base_excitation(double intensity, double f_lo, double f_hi,
                               const BaseEnvelope& envelope, double duration, double dt,
                               const ShearBuildingSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < 1.0 / (2.0 * dt))) {
    throw Error(ErrorKind::InvalidBand, "need 0 < f_lo < f_hi < 1/(2 dt)");
  }
  if (envelope.rise < 0.0 || envelope.plateau < 0.0 || envelope.fall < 0.0) {
    throw Error(ErrorKind::InvalidScenario, "envelope durations must be >= 0");
  }

  LoadSignal s;
  s.time = uniform_grid(duration, dt);
  const Eigen::Index T = s.time.size();
  const auto n = static_cast<Eigen::Index>(spec.n_stories());

  // Band-pass biquad, bilinear transform with prewarping at the centre.
  const double f0 = std::sqrt(f_lo * f_hi);
  const double q = f0 / (f_hi - f_lo);
  const double w0 = 2.0 * std::numbers::pi * f0 * dt;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd ag(T);
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (Eigen::Index k = 0; k < T; ++k) {
    const double x = gauss(rng);
    const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    const double t = s.time(k);
    double env = 0.0;
    if (t < envelope.rise) {
      env = envelope.rise > 0.0 ? t / envelope.rise : 1.0;
    } else if (t < envelope.rise + envelope.plateau) {
      env = 1.0;
    } else if (t < envelope.rise + envelope.plateau + envelope.fall) {
      env = 1.0 - (t - envelope.rise - envelope.plateau) / envelope.fall;
    }
    ag(k) = env * y;
  }
  const double peak = ag.cwiseAbs().maxCoeff();
  if (peak > 0.0) ag *= intensity / peak;

  s.forces.resize(T, n);
  for (Eigen::Index i = 0; i < n; ++i) s.forces.col(i) = -spec.masses[i] * ag;

  s.descriptor.kind = LoadKind::Base;
  s.descriptor.seed = seed;
  s.descriptor.parameters = {{"intensity", intensity},     {"f_lo", f_lo},
                             {"f_hi", f_hi},               {"rise", envelope.rise},
                             {"plateau", envelope.plateau}, {"fall", envelope.fall},
                             {"duration", duration},       {"dt", dt}};
  return s;
}

LoadSignal gen_impulse(double peak, double width, double impact_time, double duration, double dt,
                       std::size_t dof, std::size_t n) {
  check_dof(dof, n);
  if (!(width >= 2.0 * dt * (1.0 - 1e-12))) {
    throw Error(ErrorKind::InvalidScenario, "pulse width must be >= 2 dt");
  }
  if (impact_time < 0.0 || impact_time + width > duration + 1e-9 * dt) {
    throw Error(ErrorKind::Truncation, "pulse exceeds the record duration");
  }
  LoadSignal s;
  s.time = uniform_grid(duration, dt);
  s.forces = Eigen::MatrixXd::Zero(s.time.size(), static_cast<Eigen::Index>(n));
  const auto col = static_cast<Eigen::Index>(dof);
  const double tol = 1e-9 * dt;
  for (Eigen::Index k = 0; k < s.time.size(); ++k) {
    const double tau = s.time(k) - impact_time;
    if (tau <= tol || tau >= width - tol) continue;
    s.forces(k, col) = peak * std::sin(std::numbers::pi * tau / width);
  }
  s.descriptor.kind = LoadKind::Impulse;
  s.descriptor.parameters = {{"peak", peak},         {"width", width}, {"impact_time", impact_time},
                             {"duration", duration}, {"dt", dt},       {"dof", static_cast<double>(dof)}};
  return s;
}

ResponseRecord integrate_rk4(const SystemMatrices& mats, const LoadSignal& load,
                             const Eigen::VectorXd& z0) {
  const Eigen::Index n = mats.dofs();
  const Eigen::Index T = load.samples();
  if (load.forces.rows() != T || load.forces.cols() != n) {
    throw Error(ErrorKind::Shape, "load forces must be T x n");
  }
  if (z0.size() != 0 && z0.size() != 2 * n) throw Error(ErrorKind::Shape, "z0 must have length 2n");

  Eigen::FullPivLU<Eigen::MatrixXd> lu(mats.M);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularMass, "mass matrix is singular");
  const Eigen::MatrixXd minv = lu.inverse();
  const Eigen::MatrixXd minv_k = minv * mats.K;
  const Eigen::MatrixXd minv_c = minv * mats.C;

  auto rhs = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& f) {
    Eigen::VectorXd dz(2 * n);
    dz.head(n) = z.tail(n);
    dz.tail(n) = minv * f - minv_k * z.head(n) - minv_c * z.tail(n);
    return dz;
  };

  ResponseRecord r;
  r.time = load.time;
  r.load = load;
  r.displacements.resize(T, n);
  r.velocities.resize(T, n);
  r.accelerations.resize(T, n);

  Eigen::VectorXd z = z0.size() ? z0 : Eigen::VectorXd::Zero(2 * n);
  auto store = [&](Eigen::Index k) {
    r.displacements.row(k) = z.head(n).transpose();
    r.velocities.row(k) = z.tail(n).transpose();
    const Eigen::VectorXd f = load.forces.row(k).transpose();
    r.accelerations.row(k) =
        (minv * (f - mats.C * z.tail(n) - mats.K * z.head(n))).transpose();
  };
  if (T == 0) return r;
  store(0);
  for (Eigen::Index k = 0; k + 1 < T; ++k) {
    const double h = load.time(k + 1) - load.time(k);
    const Eigen::VectorXd f0 = load.forces.row(k).transpose();
    const Eigen::VectorXd f1 = load.forces.row(k + 1).transpose();
    const Eigen::VectorXd fm = 0.5 * (f0 + f1);
    const Eigen::VectorXd k1 = rhs(z, f0);
    const Eigen::VectorXd k2 = rhs(z + 0.5 * h * k1, fm);
    const Eigen::VectorXd k3 = rhs(z + 0.5 * h * k2, fm);
    const Eigen::VectorXd k4 = rhs(z + h * k3, f1);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite()) throw DivergenceError("RK4 state became non-finite", k + 1);
    store(k + 1);
  }
  return r;
}

Eigen::MatrixXd add_noise(const Eigen::MatrixXd& clean, double nsr, std::uint64_t seed) {
  if (!(nsr >= 0.0)) throw Error(ErrorKind::InvalidParameter, "nsr must be >= 0");
  Eigen::MatrixXd out = clean;
  if (nsr == 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index c = 0; c < clean.cols(); ++c) {
    const double signal_rms = column_rms(clean, c);
    if (!(signal_rms > 0.0)) {
      throw Error(ErrorKind::DegenerateChannel,
                  "channel " + std::to_string(c) + " has zero RMS; cannot scale noise");
    }
    Eigen::VectorXd g(clean.rows());
    for (Eigen::Index k = 0; k < g.size(); ++k) g(k) = gauss(rng);
    const double g_rms = std::sqrt(g.squaredNorm() / static_cast<double>(g.size()));
    out.col(c) += (nsr * signal_rms / g_rms) * g;
  }
  return out;
}

PseudoMeasurements make_pseudo_measurements(const Eigen::MatrixXd& accel, double dt) {
  PseudoMeasurements p;
  p.vel = Eigen::MatrixXd::Zero(accel.rows(), accel.cols());
  p.disp = Eigen::MatrixXd::Zero(accel.rows(), accel.cols());
  for (Eigen::Index k = 1; k < accel.rows(); ++k) {
    p.vel.row(k) = p.vel.row(k - 1) + 0.5 * dt * (accel.row(k - 1) + accel.row(k));
    p.disp.row(k) = p.disp.row(k - 1) + 0.5 * dt * (p.vel.row(k - 1) + p.vel.row(k));
  }
  return p;
}

// ---------------------------------------------------------------------------

void ScenarioConfig::validate() const {
  building.validate();
  const std::size_t n = building.n_stories();
  if (!(dt > 0.0) || !(duration > 0.0)) {
    throw Error(ErrorKind::InvalidScenario, "dt and duration must be positive");
  }
  if (measured_dofs.empty()) throw Error(ErrorKind::InvalidScenario, "no measured DOFs");
  for (std::size_t d : measured_dofs) check_dof(d, n);
  check_dof(load_dof, n);
  if (!(nsr >= 0.0)) throw Error(ErrorKind::InvalidScenario, "nsr must be >= 0");
  auto check = [](const Range& r, const char* name, bool positive) {
    if (!(r.lo <= r.hi) || (positive && !(r.lo > 0.0)) || (!positive && r.lo < 0.0)) {
      throw Error(ErrorKind::InvalidScenario, std::string("invalid range for ") + name);
    }
  };
  switch (kind) {
    case ScenarioKind::Shaker:
      check(amplitude, "amplitude", true);
      check(omega, "omega", true);
      check(decay, "decay", false);
      check(onset, "onset", false);
      if (!(onset.hi < duration)) throw Error(ErrorKind::InvalidScenario, "onset range exceeds duration");
      break;
    case ScenarioKind::Base:
      check(intensity, "intensity", true);
      if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < 1.0 / (2.0 * dt))) {
        throw Error(ErrorKind::InvalidBand, "need 0 < f_lo < f_hi < 1/(2 dt)");
      }
      break;
    case ScenarioKind::Impact:
      check(peak, "peak", true);
      check(width, "width", true);
      check(impact_time, "impact_time", false);
      if (width.lo < 2.0 * dt) throw Error(ErrorKind::InvalidScenario, "pulse width below 2 dt");
      if (impact_time.hi + width.hi > duration) {
        throw Error(ErrorKind::InvalidScenario, "impact range exceeds duration");
      }
      break;
  }
}

std::vector<std::size_t> ScenarioConfig::target_dofs() const {
  if (kind == ScenarioKind::Base) return {0};
  return {load_dof};
}

Sequence generate_sequence(const ScenarioConfig& scenario, std::uint64_t seed, std::size_t index) {
  Rng rng = make_rng(seed, "load", index);
  auto draw = [&rng](const Range& r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };
  const std::size_t n = scenario.building.n_stories();

  LoadSignal load;
  switch (scenario.kind) {
    case ScenarioKind::Shaker: {
      const double amp = draw(scenario.amplitude);
      const double omega = draw(scenario.omega);
      const double decay = draw(scenario.decay);
      const double onset = draw(scenario.onset);
      load = gen_decaying_harmonic(amp, omega, decay, onset, scenario.duration, scenario.dt,
                                   scenario.load_dof, n);
      break;
    }
    case ScenarioKind::Base: {
      const double intensity = draw(scenario.intensity);
      load = gen_base_excitation(intensity, scenario.f_lo, scenario.f_hi, scenario.envelope,
                                 scenario.duration, scenario.dt, scenario.building,
                                 substream_seed(seed, "base", index));
      break;
    }
    case ScenarioKind::Impact: {
      const double peak = draw(scenario.peak);
      const double width = draw(scenario.width);
      const double t0 = draw(scenario.impact_time);
      load = gen_impulse(peak, width, t0, scenario.duration, scenario.dt, scenario.load_dof, n);
      break;
    }
  }
  load.descriptor.seed = seed;
  load.descriptor.parameters["index"] = static_cast<double>(index);

  const SystemMatrices mats = build_shear_matrices(scenario.building);
  const ResponseRecord resp = integrate_rk4(mats, load);

  Sequence seq;
  MeasurementSet& m = seq.measurements;
  m.time = resp.time;
  m.measured_dofs = scenario.measured_dofs;
  m.nsr = scenario.nsr;
  m.seed = substream_seed(seed, "noise", index);
  m.clean_accel.resize(resp.time.size(), static_cast<Eigen::Index>(m.measured_dofs.size()));
  for (std::size_t j = 0; j < m.measured_dofs.size(); ++j) {
    m.clean_accel.col(static_cast<Eigen::Index>(j)) =
        resp.accelerations.col(static_cast<Eigen::Index>(m.measured_dofs[j]));
  }
  m.noisy_accel = add_noise(m.clean_accel, m.nsr, m.seed);
  const PseudoMeasurements pm = make_pseudo_measurements(m.noisy_accel, scenario.dt);
  m.pseudo_disp = Eigen::MatrixXd::Zero(resp.time.size(), static_cast<Eigen::Index>(n));
  m.pseudo_vel = Eigen::MatrixXd::Zero(resp.time.size(), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < m.measured_dofs.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(m.measured_dofs[j]);
    m.pseudo_disp.col(c) = pm.disp.col(static_cast<Eigen::Index>(j));
    m.pseudo_vel.col(c) = pm.vel.col(static_cast<Eigen::Index>(j));
  }
  seq.load = std::move(load);
  return seq;
}

Dataset build_dataset(const ScenarioConfig& scenario, std::size_t count, SplitCounts split,
                      std::uint64_t seed, unsigned threads) {
  scenario.validate();
  if (count == 0 || split.total() != count) {
    throw Error(ErrorKind::InvalidScenario, "split counts must sum to the sequence count");
  }
  Dataset ds;
  ds.sequences.resize(count);
  parallel_for(count, threads, [&](std::size_t i) { ds.sequences[i] = generate_sequence(scenario, seed, i); });

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);
  auto take = [&](std::size_t from, std::size_t len) {
    std::vector<std::size_t> v(order.begin() + static_cast<long>(from),
                               order.begin() + static_cast<long>(from + len));
    std::sort(v.begin(), v.end());
    return v;
  };
  ds.split.train = take(0, split.train);
  ds.split.val = take(split.train, split.val);
  ds.split.test = take(split.train + split.val, split.test);
  return ds;
}

}  // namespace loadid
