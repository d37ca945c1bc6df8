#include "paylift/linearization.hpp"

#include <cmath>

#include "paylift/spatial.hpp"

namespace paylift {

void require_decoupling_assumptions(const VehicleParams& params) {
  params.validate();
  const Mat3 off_diag =
      params.h_tot - Mat3(params.h_tot.diagonal().asDiagonal());
  if (off_diag.norm() > 1e-12 * params.h_tot.norm()) {
    throw assumption_violation(
        "diagonal inertia assumption violated: h_tot has off-diagonal "
        "entries");
  }
  if (params.r_pl.head<2>().norm() > 1e-12) {
    throw assumption_violation(
        "z-axis placement assumption violated: r_pl is off the body z axis");
  }
  if (params.r_poi.head<2>().norm() > 1e-12) {
    throw assumption_violation(
        "z-axis placement assumption violated: r_poi is off the body z axis");
  }
}

InputScaling input_scaling(const VehicleParams& params) {
  require_decoupling_assumptions(params);
  const DerivedGeometry geom = derive_geometry(params);
  const double z_pl = params.r_pl.z();
  InputScaling scaling;
  scaling.b1 = params.m_pl * params.m_uav * z_pl * z_pl +
               params.h_tot(1, 1) * geom.m_tot;
  scaling.b2 = params.m_pl * params.m_uav * z_pl * z_pl +
               params.h_tot(0, 0) * geom.m_tot;
  scaling.psi = Eigen::Vector4d(1.0 / geom.m_tot, geom.m_tot / scaling.b2,
                                geom.m_tot / scaling.b1,
                                1.0 / params.h_tot(2, 2))
                    .asDiagonal();
  return scaling;
}

void CostWeights::validate() const {
  for (double q : {q1, q2, q3, q4}) {
    if (!(q > 0.0) || !std::isfinite(q)) {
      throw std::invalid_argument("cost weights must be positive and finite");
    }
  }
}

std::pair<RigidState, ControlInput> hover_equilibrium(
    const VehicleParams& params) {
  params.validate();
  const DerivedGeometry geom = derive_geometry(params);
  ControlInput input;
  input.thrust = geom.m_tot * params.g;
  // Balances the gravity torque at identity attitude. On-axis geometry
  // makes the cross product vanish entry by entry, so the torque is a
  // float-exact zero there.
  input.torque =
      geom.m_tot * params.g * (skew(geom.r_hat).transpose() * Vec3::UnitZ());
  return {RigidState{}, input};
}

LinearModel linearize_numeric(const VehicleParams& params) {
  const auto [state_eq, input_eq] = hover_equilibrium(params);
  const Vec12 x0 = state_eq.to_vector();
  const Vec4 u0 = input_eq.to_vector();

  const auto derivative = [&params](const Vec12& x, const Vec4& u) -> Vec12 {
    return nonlinear_derivative(params, RigidState::from_vector(x),
                                ControlInput::from_vector(u));
  };

  LinearModel model;
  model.equilibrium_input = input_eq;
  for (int j = 0; j < 12; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0(j)));
    Vec12 plus = x0, minus = x0;
    plus(j) += h;
    minus(j) -= h;
    model.a.col(j) = (derivative(plus, u0) - derivative(minus, u0)) / (2.0 * h);
  }
  for (int j = 0; j < 4; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(u0(j)));
    Vec4 plus = u0, minus = u0;
    plus(j) += h;
    minus(j) -= h;
    model.b.col(j) = (derivative(x0, plus) - derivative(x0, minus)) / (2.0 * h);
  }
  return model;
}

LinearModel build_simplified(const VehicleParams& params,
                             const InputScaling& scaling) {
  require_decoupling_assumptions(params);
  const DerivedGeometry geom = derive_geometry(params);

  LinearModel model;
  model.a(0, 10) = params.g;   // vx_dot = g * theta
  model.a(1, 9) = -params.g;   // vy_dot = -g * phi
  for (int i = 0; i < 3; ++i) {
    model.a(6 + i, i) = 1.0;   // p_dot = v
    model.a(9 + i, 3 + i) = 1.0;  // eta_dot = omega at identity attitude
  }

  Mat12x4 b_hat = Mat12x4::Zero();
  b_hat(0, 2) = geom.alpha;
  b_hat(1, 1) = -geom.alpha;
  b_hat(2, 0) = 1.0;
  b_hat(3, 1) = 1.0;
  b_hat(4, 2) = 1.0;
  b_hat(5, 3) = 1.0;
  model.b = b_hat * scaling.psi;
  model.equilibrium_input = hover_equilibrium(params).second;
  return model;
}

std::array<LinearSubsystem, 4> decouple(const VehicleParams& params,
                                        const CostWeights& weights) {
  weights.validate();
  const InputScaling scaling = input_scaling(params);
  const DerivedGeometry geom = derive_geometry(params);
  const double g = params.g;

  const auto lateral = [&](int index, double sign, double q_hat) {
    LinearSubsystem sub;
    sub.index = index;
    sub.a_i = Eigen::MatrixXd::Zero(4, 4);
    sub.a_i(0, 1) = 1.0;
    sub.a_i(1, 2) = sign * g;
    sub.a_i(2, 3) = 1.0;
    sub.b_i = Eigen::VectorXd::Zero(4);
    sub.b_i(1) = sign * geom.alpha;
    sub.b_i(3) = 1.0;
    sub.alpha = geom.alpha;
    sub.q_hat = q_hat;
    sub.g = g;
    return sub;
  };
  const auto double_integrator = [&](int index, double q_hat) {
    LinearSubsystem sub;
    sub.index = index;
    sub.a_i = Eigen::MatrixXd::Zero(2, 2);
    sub.a_i(0, 1) = 1.0;
    sub.b_i = Eigen::VectorXd::Zero(2);
    sub.b_i(1) = 1.0;
    sub.q_hat = q_hat;
    sub.g = g;
    return sub;
  };

  return {lateral(1, 1.0, scaling.b1 / geom.m_tot * weights.q1),
          lateral(2, -1.0, scaling.b2 / geom.m_tot * weights.q2),
          double_integrator(3, geom.m_tot * weights.q3),
          double_integrator(4, params.h_tot(2, 2) * weights.q4)};
}

TransferZeros transfer_zeros(const LinearSubsystem& subsystem) {
  TransferZeros result;
  if (subsystem.a_i.rows() != 4 || subsystem.alpha == 0.0) {
    return result;  // pure integrator chain, no finite zeros
  }
  result.has_finite_zeros = true;
  const double ratio = subsystem.g / subsystem.alpha;
  if (subsystem.alpha > 0.0) {
    const double w = std::sqrt(ratio);
    result.zeros = {std::complex<double>(0.0, w),
                    std::complex<double>(0.0, -w)};
    result.non_minimum_phase = false;
  } else {
    const double s = std::sqrt(-ratio);
    result.zeros = {std::complex<double>(s, 0.0),
                    std::complex<double>(-s, 0.0)};
    result.non_minimum_phase = true;
  }
  return result;
}

Vec12 to_decoupled_order(const Vec12& x) {
  Vec12 x_bar;
  for (int k = 0; k < 12; ++k) {
    x_bar(k) = x(kDecoupledStateIndex[k]);
  }
  return x_bar;
}

Vec12 from_decoupled_order(const Vec12& x_bar) {
  Vec12 x;
  for (int k = 0; k < 12; ++k) {
    x(kDecoupledStateIndex[k]) = x_bar(k);
  }
  return x;
}

}  // namespace paylift
