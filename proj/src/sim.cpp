#include "paylift/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "paylift/spatial.hpp"

namespace paylift {
namespace {

constexpr double kDivergenceNorm = 1e6;
constexpr double kAdaptiveAbsTol = 1e-10;
constexpr double kAdaptiveRelTol = 1e-9;
constexpr double kMinStep = 1e-8;
constexpr double kMaxStep = 1e-2;
constexpr int kMonteCarloRuns = 20;

/// Feedback loop assembled once per run: optimal gain over the decoupled
/// ordering, the input normalization and its inverse, the hover wrench,
/// and the weights of both cost integrands.
struct ClosedLoop {
  VehicleParams params;
  std::array<LinearSubsystem, 4> subsystems;
  Eigen::Matrix<double, 4, 12> gain;
  Eigen::Matrix4d psi_inv = Eigen::Matrix4d::Identity();
  Vec4 equilibrium = Vec4::Zero();
  LinearModel linear;
  std::array<double, 4> q_raw{};   // per output (x, y, z, yaw)
  std::array<double, 4> q_hat{};   // same outputs, normalized weights
};

ClosedLoop build_loop(const VehicleParams& params, const CostWeights& weights) {
  params.validate();
  weights.validate();
  ClosedLoop loop;
  loop.params = params;
  loop.subsystems = decouple(params, weights);
  std::array<RiccatiBlock, 4> blocks;
  for (int c = 0; c < 4; ++c) {
    blocks[static_cast<size_t>(c)] = closed_form_riccati(
        loop.subsystems[static_cast<size_t>(c)],
        loop.subsystems[static_cast<size_t>(c)].q_hat);
    loop.q_hat[static_cast<size_t>(c)] =
        loop.subsystems[static_cast<size_t>(c)].q_hat;
  }
  loop.gain = lqr_gain(blocks, loop.subsystems);
  const InputScaling scaling = input_scaling(params);
  loop.psi_inv = scaling.psi.diagonal().cwiseInverse().asDiagonal();
  loop.linear = build_simplified(params, scaling);
  loop.equilibrium = loop.linear.equilibrium_input.to_vector();
  loop.q_raw = {weights.q1, weights.q2, weights.q3, weights.q4};
  return loop;
}

/// Output error of the regulation cost: position of the point of interest
/// and yaw, in that order.
Vec4 output_error(const Vec12& x) { return Vec4(x(6), x(7), x(8), x(11)); }

}  // namespace

Mat12 closed_loop_state_matrix(const VehicleParams& params,
                               const CostWeights& weights) {
  const ClosedLoop loop = build_loop(params, weights);
  Mat12 perm = Mat12::Zero();
  for (int i = 0; i < 12; ++i) {
    perm(i, kDecoupledStateIndex[static_cast<size_t>(i)]) = 1.0;
  }
  return loop.linear.a - loop.linear.b * loop.psi_inv * loop.gain * perm;
}

double slowest_decay_rate(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(a);
  double slowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    slowest = std::min(slowest, -eig.eigenvalues()(i).real());
  }
  return slowest;
}

namespace {

// State augmented with both running costs.
using AugVec = Eigen::Matrix<double, 14, 1>;

/// Closed-loop derivative including the cost integrands. Feedback is a
/// function of the state, so integrator stages see the continuous control
/// law; `noise` is the zero-order-hold raw-input disturbance of the
/// current step. The cost integrands use the commanded input only, never
/// the disturbance.
struct LoopDerivative {
  const ClosedLoop& loop;
  ModelKind model;
  Vec4 noise = Vec4::Zero();

  AugVec operator()(const AugVec& z) const {
    const Vec12 x = z.head<12>();
    const Vec4 f_hat = -(loop.gain * to_decoupled_order(x));
    const Vec4 u_dev = loop.psi_inv * f_hat;
    Vec12 xdot;
    if (model == ModelKind::Linearized) {
      xdot = loop.linear.a * x + loop.linear.b * (u_dev + noise);
    } else {
      const Vec4 raw = loop.equilibrium + u_dev + noise;
      xdot = nonlinear_derivative(loop.params, RigidState::from_vector(x),
                                  ControlInput::from_vector(raw));
    }
    const Vec4 y = output_error(x);
    double objective = f_hat.squaredNorm();
    double raw_cost = u_dev.squaredNorm();
    for (int i = 0; i < 4; ++i) {
      const auto idx = static_cast<size_t>(i);
      objective += loop.q_hat[idx] * loop.q_hat[idx] * y(i) * y(i);
      raw_cost += loop.q_raw[idx] * loop.q_raw[idx] * y(i) * y(i);
    }
    AugVec out;
    out.head<12>() = xdot;
    out(12) = objective;
    out(13) = raw_cost;
    return out;
  }
};

template <typename F>
AugVec rk4_step(const F& f, const AugVec& z, double h) {
  const AugVec k1 = f(z);
  const AugVec k2 = f(z + (0.5 * h) * k1);
  const AugVec k3 = f(z + (0.5 * h) * k2);
  const AugVec k4 = f(z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct StepAttempt {
  AugVec z = AugVec::Zero();
  double error_ratio = 0.0;  // <= 1 means the tolerances were met
};

/// One Dormand-Prince 5(4) attempt. The returned state is the fifth-order
/// solution; error_ratio is the embedded estimate over the mixed
/// absolute/relative tolerance, maximized across components.
template <typename F>
StepAttempt dp54_step(const F& f, const AugVec& z, double h, double abstol,
                      double reltol) {
  const AugVec k1 = f(z);
  const AugVec k2 = f(z + h * ((1.0 / 5.0) * k1));
  const AugVec k3 = f(z + h * ((3.0 / 40.0) * k1 + (9.0 / 40.0) * k2));
  const AugVec k4 = f(z + h * ((44.0 / 45.0) * k1 + (-56.0 / 15.0) * k2 +
                               (32.0 / 9.0) * k3));
  const AugVec k5 =
      f(z + h * ((19372.0 / 6561.0) * k1 + (-25360.0 / 2187.0) * k2 +
                 (64448.0 / 6561.0) * k3 + (-212.0 / 729.0) * k4));
  const AugVec k6 =
      f(z + h * ((9017.0 / 3168.0) * k1 + (-355.0 / 33.0) * k2 +
                 (46732.0 / 5247.0) * k3 + (49.0 / 176.0) * k4 +
                 (-5103.0 / 18656.0) * k5));
  StepAttempt attempt;
  attempt.z = z + h * ((35.0 / 384.0) * k1 + (500.0 / 1113.0) * k3 +
                       (125.0 / 192.0) * k4 + (-2187.0 / 6784.0) * k5 +
                       (11.0 / 84.0) * k6);
  const AugVec k7 = f(attempt.z);
  const AugVec fourth =
      z + h * ((5179.0 / 57600.0) * k1 + (7571.0 / 16695.0) * k3 +
               (393.0 / 640.0) * k4 + (-92097.0 / 339200.0) * k5 +
               (187.0 / 2100.0) * k6 + (1.0 / 40.0) * k7);
  double ratio = 0.0;
  for (int i = 0; i < attempt.z.size(); ++i) {
    const double scale =
        abstol + reltol * std::max(std::abs(z(i)), std::abs(attempt.z(i)));
    ratio = std::max(ratio, std::abs(attempt.z(i) - fourth(i)) / scale);
  }
  attempt.error_ratio = ratio;
  return attempt;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("sim config: dt must be positive and finite");
  }
  if (!(horizon >= dt) || !std::isfinite(horizon)) {
    throw std::invalid_argument(
        "sim config: horizon must be finite and at least one step");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw std::invalid_argument(
        "sim config: noise intensity must be nonnegative and finite");
  }
  if (noise_sigma > 0.0 && integrator != IntegratorKind::RK4Fixed) {
    throw std::invalid_argument(
        "sim config: input noise requires the fixed-step integrator; an "
        "adapted step would reshape the noise spectrum");
  }
}

NoiseStream::NoiseStream(std::uint64_t seed, double sigma, double dt)
    : rng_(seed),
      dist_(0.0, sigma > 0.0 && dt > 0.0 ? sigma / std::sqrt(dt) : 1.0),
      silent_(sigma == 0.0) {
  if (!(sigma >= 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("noise stream: sigma >= 0 and dt > 0 required");
  }
}

double NoiseStream::next() { return silent_ ? 0.0 : dist_(rng_); }

Vec4 NoiseStream::next_vec4() {
  Vec4 w;
  for (int i = 0; i < 4; ++i) w(i) = next();
  return w;
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 hop: decorrelates consecutive stream ids
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Trajectory simulate(const VehicleParams& params, const CostWeights& weights,
                    const SimConfig& config, const RigidState& initial) {
  config.validate();
  const ClosedLoop loop = build_loop(params, weights);

  const Vec12 x0 = initial.to_vector();
  if (!x0.allFinite()) {
    throw std::invalid_argument("simulate: initial state must be finite");
  }
  if (std::abs(initial.eta.theta) >=
      std::numbers::pi / 2.0 - kPitchMargin) {
    throw std::invalid_argument(
        "simulate: initial pitch must stay clear of the parametrization "
        "singularity at pi/2");
  }

  Trajectory traj;
  LoopDerivative f{loop, config.model, Vec4::Zero()};
  AugVec z = AugVec::Zero();
  z.head<12>() = x0;
  double t = 0.0;
  const double t_eps = 1e-9 * std::max(1.0, config.horizon);
  const bool noisy =
      config.noise_sigma > 0.0 && config.integrator == IntegratorKind::RK4Fixed;
  NoiseStream noise(config.seed, config.noise_sigma, config.dt);

  const auto expected =
      static_cast<size_t>(config.horizon / config.dt) + 2;
  traj.times.reserve(expected);
  traj.states.reserve(expected);
  traj.inputs.reserve(expected);
  traj.cumulative_cost.reserve(expected);
  traj.cumulative_cost_raw.reserve(expected);

  const auto push_sample = [&]() {
    const Vec12 x = z.head<12>();
    const Vec4 f_hat = -(loop.gain * to_decoupled_order(x));
    const Vec4 raw = loop.equilibrium + loop.psi_inv * f_hat + f.noise;
    traj.times.push_back(t);
    traj.states.push_back(RigidState::from_vector(x));
    traj.inputs.push_back(ControlInput::from_vector(raw));
    traj.cumulative_cost.push_back(z(12));
    traj.cumulative_cost_raw.push_back(z(13));
  };

  if (config.integrator == IntegratorKind::RK4Fixed) {
    if (noisy) f.noise = noise.next_vec4();
    push_sample();
    while (config.horizon - t > t_eps) {
      const double remaining = config.horizon - t;
      const bool last = remaining <= config.dt * (1.0 + 1e-9);
      const double h = last ? remaining : config.dt;
      AugVec z_next;
      try {
        z_next = rk4_step(f, z, h);
      } catch (const singular_attitude&) {
        traj.aborted_attitude = true;
        break;
      }
      z = z_next;
      if (!z.allFinite()) {
        traj.diverged = true;
        break;
      }
      t = last ? config.horizon : t + h;
      const bool diverged = z.head<12>().norm() > kDivergenceNorm;
      f.noise.setZero();
      if (noisy && !last && !diverged) f.noise = noise.next_vec4();
      push_sample();
      if (diverged) {
        traj.diverged = true;
        break;
      }
    }
  } else {
    push_sample();
    double h = std::clamp(config.dt, kMinStep, kMaxStep);
    while (config.horizon - t > t_eps) {
      const double remaining = config.horizon - t;
      const bool clipped = remaining <= h;
      const double h_try = clipped ? remaining : h;
      StepAttempt attempt;
      try {
        attempt = dp54_step(f, z, h_try, kAdaptiveAbsTol, kAdaptiveRelTol);
      } catch (const singular_attitude&) {
        traj.aborted_attitude = true;
        break;
      }
      const bool forced = h_try <= kMinStep * (1.0 + 1e-12);
      if (attempt.error_ratio <= 1.0 || forced) {
        z = attempt.z;
        if (!z.allFinite()) {
          traj.diverged = true;
          break;
        }
        t = clipped ? config.horizon : t + h_try;
        const bool diverged = z.head<12>().norm() > kDivergenceNorm;
        push_sample();
        if (diverged) {
          traj.diverged = true;
          break;
        }
      }
      double factor = 0.2;  // shrink hard when the estimate is unusable
      if (std::isfinite(attempt.error_ratio)) {
        factor = attempt.error_ratio > 0.0
                     ? std::clamp(0.9 * std::pow(attempt.error_ratio, -0.2),
                                  0.2, 5.0)
                     : 5.0;
      }
      h = std::clamp(h_try * factor, kMinStep, kMaxStep);
    }
  }
  return traj;
}

std::vector<ModelErrorCurve> compare_models(
    const VehicleParams& params, const CostWeights& weights,
    const SimConfig& config, const std::vector<double>& initial_angles) {
  config.validate();
  if (config.noise_sigma != 0.0) {
    throw std::invalid_argument(
        "compare_models: the comparison is deterministic; set the noise "
        "intensity to zero");
  }
  if (config.integrator != IntegratorKind::RK4Fixed) {
    throw std::invalid_argument(
        "compare_models: both models must share one fixed time grid");
  }
  std::vector<ModelErrorCurve> curves;
  curves.reserve(initial_angles.size());
  for (const double angle : initial_angles) {
    if (!std::isfinite(angle) ||
        std::abs(angle) >= std::numbers::pi / 2.0 - kPitchMargin) {
      throw std::invalid_argument(
          "compare_models: initial pitch angles must lie inside "
          "(-pi/2, pi/2)");
    }
    RigidState initial;
    initial.eta.theta = angle;
    SimConfig nl = config;
    nl.model = ModelKind::Nonlinear;
    SimConfig lin = config;
    lin.model = ModelKind::Linearized;
    const Trajectory t_nl = simulate(params, weights, nl, initial);
    const Trajectory t_lin = simulate(params, weights, lin, initial);
    ModelErrorCurve curve;
    curve.initial_angle = angle;
    const size_t n = std::min(t_nl.times.size(), t_lin.times.size());
    curve.times.reserve(n);
    curve.error.reserve(n);
    for (size_t k = 0; k < n; ++k) {
      curve.times.push_back(t_nl.times[k]);
      const double err =
          (t_nl.states[k].to_vector() - t_lin.states[k].to_vector()).norm();
      curve.error.push_back(err);
      curve.peak_error = std::max(curve.peak_error, err);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

H2Estimate estimate_h2(const VehicleParams& params, const CostWeights& weights,
                       const SimConfig& config, int channel) {
  config.validate();
  if (!(config.noise_sigma > 0.0)) {
    throw std::invalid_argument(
        "estimate_h2: a positive noise intensity is required");
  }
  if (channel < 1 || channel > 4) {
    throw std::invalid_argument("estimate_h2: channel must be 1..4");
  }
  const ClosedLoop loop = build_loop(params, weights);
  const auto c = static_cast<size_t>(channel - 1);
  const LinearSubsystem& sub = loop.subsystems[c];
  const int row = kChannelInputRow[c];

  // first coordinate of the channel in the RigidState layout
  int offset = 0;
  for (size_t i = 0; i < c; ++i) {
    offset += static_cast<int>(loop.subsystems[i].a_i.rows());
  }
  const int out_idx = kDecoupledStateIndex[static_cast<size_t>(offset)];
  const double q_hat = sub.q_hat;

  // burn-in: five times the slowest closed-loop time constant
  const RiccatiBlock block = closed_form_riccati(sub, q_hat);
  const Eigen::MatrixXd a_cl =
      sub.a_i - sub.b_i * (sub.b_i.transpose() * block.p);
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(a_cl);
  double slowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    slowest = std::min(slowest, -eig.eigenvalues()(i).real());
  }
  if (!(slowest > 0.0)) {
    throw std::runtime_error("estimate_h2: closed loop is not stable");
  }
  const auto total_steps = static_cast<long long>(
      std::floor(config.horizon / config.dt + 1e-9));
  const auto burn_steps =
      static_cast<long long>(std::ceil(5.0 / slowest / config.dt - 1e-9));
  if (burn_steps >= total_steps) {
    throw std::invalid_argument(
        "estimate_h2: horizon leaves no steady-state samples after the "
        "burn-in of five slowest time constants");
  }

  const double inject_scale = loop.psi_inv(row, row);
  const double sigma_sq = config.noise_sigma * config.noise_sigma;
  std::vector<double> run_means;
  run_means.reserve(kMonteCarloRuns);
  long long samples_total = 0;
  for (int s = 0; s < kMonteCarloRuns; ++s) {
    NoiseStream stream(
        derive_stream_seed(config.seed, static_cast<std::uint64_t>(s)),
        config.noise_sigma, config.dt);
    LoopDerivative f{loop, config.model, Vec4::Zero()};
    AugVec z = AugVec::Zero();
    double sum = 0.0;
    long long count = 0;
    for (long long k = 0; k < total_steps; ++k) {
      if (k >= burn_steps) {
        const Vec12 x = z.head<12>();
        const Vec4 f_hat = -(loop.gain * to_decoupled_order(x));
        const double y = x(out_idx);
        sum += q_hat * q_hat * y * y + f_hat(row) * f_hat(row);
        ++count;
      }
      f.noise = Vec4::Unit(row) * (inject_scale * stream.next());
      try {
        z = rk4_step(f, z, config.dt);
      } catch (const singular_attitude&) {
        throw std::runtime_error(
            "estimate_h2: a run reached the attitude singularity; the "
            "steady-state average is undefined");
      }
      if (!z.allFinite() || z.head<12>().norm() > kDivergenceNorm) {
        throw std::runtime_error(
            "estimate_h2: a run diverged; the steady-state average is "
            "undefined");
      }
    }
    run_means.push_back(sum / static_cast<double>(count) / sigma_sq);
    samples_total += count;
  }

  double mean = 0.0;
  for (const double e : run_means) mean += e;
  mean /= static_cast<double>(run_means.size());
  double var = 0.0;
  for (const double e : run_means) var += (e - mean) * (e - mean);
  var /= static_cast<double>(run_means.size() - 1);
  const double se_mean = std::sqrt(var / static_cast<double>(run_means.size()));

  H2Estimate estimate;
  estimate.value = std::sqrt(mean);
  estimate.standard_error =
      estimate.value > 0.0 ? se_mean / (2.0 * estimate.value) : 0.0;
  estimate.n_steps = samples_total;
  estimate.n_runs = kMonteCarloRuns;
  return estimate;
}

std::vector<CostGap> cost_comparison(const VehicleParams& params,
                                     const CostWeights& weights,
                                     const SimConfig& config,
                                     double alpha_magnitude,
                                     const std::vector<RigidState>& initial_set) {
  config.validate();
  if (!(alpha_magnitude > 0.0) || !std::isfinite(alpha_magnitude)) {
    throw std::invalid_argument(
        "cost_comparison: the placement magnitude must be positive");
  }
  if (config.noise_sigma != 0.0) {
    throw std::invalid_argument(
        "cost_comparison: the comparison is deterministic; set the noise "
        "intensity to zero");
  }
  const DerivedGeometry geom = derive_geometry(params);
  const double shift = params.m_pl / geom.m_tot * params.r_pl.z();
  VehicleParams above = params;
  above.r_poi = Vec3(0.0, 0.0, alpha_magnitude + shift);
  VehicleParams below = params;
  below.r_poi = Vec3(0.0, 0.0, -alpha_magnitude + shift);
  SimConfig run = config;
  run.model = ModelKind::Nonlinear;

  std::vector<CostGap> table;
  table.reserve(initial_set.size());
  for (const RigidState& initial : initial_set) {
    const Trajectory t_above = simulate(above, weights, run, initial);
    const Trajectory t_below = simulate(below, weights, run, initial);
    CostGap gap;
    gap.cost_above = t_above.cumulative_cost.back();
    gap.cost_below = t_below.cumulative_cost.back();
    gap.gap = gap.cost_below - gap.cost_above;
    gap.clean = !t_above.aborted_attitude && !t_above.diverged &&
                !t_below.aborted_attitude && !t_below.diverged;
    table.push_back(gap);
  }
  return table;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  const std::locale previous = out.imbue(std::locale::classic());
  out.precision(17);
  out << "t,vx,vy,vz,omega_x,omega_y,omega_z,px,py,pz,phi,theta,psi,"
         "thrust,tau_x,tau_y,tau_z,cost\n";
  for (size_t k = 0; k < trajectory.times.size(); ++k) {
    out << trajectory.times[k];
    const Vec12 x = trajectory.states[k].to_vector();
    for (int i = 0; i < 12; ++i) out << ',' << x(i);
    const Vec4 u = trajectory.inputs[k].to_vector();
    for (int i = 0; i < 4; ++i) out << ',' << u(i);
    out << ',' << trajectory.cumulative_cost[k] << '\n';
  }
  out.imbue(previous);
  out.precision(precision);
  out.flags(flags);
}

}  // namespace paylift
