#pragma once

#include <array>
#include <complex>
#include <string>
#include <utility>

#include "paylift/vehicle.hpp"

namespace paylift {

using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat12x4 = Eigen::Matrix<double, 12, 4>;

/// Thrown when an operation needs the decoupling assumptions (diagonal
/// total inertia; payload and point of interest on the body z axis) and
/// the parameters violate one. what() names the violated assumption.
class assumption_violation : public std::invalid_argument {
 public:
  explicit assumption_violation(const std::string& message)
      : std::invalid_argument(message) {}
};

/// Checks both decoupling assumptions, throwing assumption_violation on
/// failure. Off-diagonal inertia is tolerated up to 1e-12 * ||h_tot||,
/// off-axis placement up to 1e-12 m; anything larger invalidates the
/// closed forms built on top, so violations are hard errors.
void require_decoupling_assumptions(const VehicleParams& params);

/// Linear hover model d/dt x = a x + b (F - F_eq) in the RigidState
/// vector layout [v, omega, p, eta]. b maps raw thrust/torque deviations
/// from the equilibrium wrench.
struct LinearModel {
  Mat12 a = Mat12::Zero();
  Mat12x4 b = Mat12x4::Zero();
  ControlInput equilibrium_input;
};

/// Diagonal normalization F_hat = psi * (F - F_eq) that turns the hover
/// linearization into unit-gain integrator chains, plus the lateral
/// effective inertias it is built from.
struct InputScaling {
  Eigen::Matrix4d psi = Eigen::Matrix4d::Identity();
  double b1 = 0.0;  // pitch channel, m_pl*m_uav*z_pl^2 + h_yy*m_tot
  double b2 = 0.0;  // roll channel,  m_pl*m_uav*z_pl^2 + h_xx*m_tot
};

/// Requires the decoupling assumptions; b1, b2 > 0 whenever the inertia
/// is positive definite.
InputScaling input_scaling(const VehicleParams& params);

/// Output weights of the quadratic hover cost. The input weight is fixed
/// at identity; the output weight matrix is diag(q1^2 .. q4^2) over
/// (x, y, z, yaw).
struct CostWeights {
  double q1 = 1.0;
  double q2 = 1.0;
  double q3 = 1.0;
  double q4 = 1.0;

  /// Throws std::invalid_argument unless every weight is positive and
  /// finite.
  void validate() const;
};

/// One decoupled channel of the normalized hover model:
///   1: [x, vx, theta, omega_y]  driven by the scaled pitch torque
///   2: [y, vy, phi, omega_x]    driven by the scaled roll torque
///   3: [z, vz]                  driven by the scaled thrust
///   4: [psi, omega_z]           driven by the scaled yaw torque
/// q_hat is the output weight of the channel after input normalization;
/// alpha is zero for channels 3 and 4, which do not see the placement.
struct LinearSubsystem {
  int index = 0;
  Eigen::MatrixXd a_i;
  Eigen::VectorXd b_i;
  double alpha = 0.0;
  double q_hat = 0.0;
  double g = 9.81;
};

/// Hover pair: the zero state (POI at the origin, zero yaw; any other
/// hover reduces to this one by a translation and a yaw rotation) and
/// the wrench balancing gravity. The torque m_tot*g*skew(r_hat)^T*e3 is
/// exactly zero when r_hat lies on the body z axis.
std::pair<RigidState, ControlInput> hover_equilibrium(const VehicleParams& params);

/// Central-difference linearization of nonlinear_derivative about the
/// hover pair; per-component step 1e-6 * max(1, |component|).
LinearModel linearize_numeric(const VehicleParams& params);

/// Closed-form hover linearization, valid only under the decoupling
/// assumptions: gravity tilts couple as +g*theta / -g*phi into the
/// lateral accelerations, torques reach them through the alpha lever,
/// and everything else is integrator chains. Expressed in raw inputs,
/// b = b_hat * psi.
LinearModel build_simplified(const VehicleParams& params,
                             const InputScaling& scaling);

/// Splits the normalized hover model into the four channels listed on
/// LinearSubsystem and attaches the scaled weights
///   q_hat_1 = (b1/m_tot) q1,  q_hat_2 = (b2/m_tot) q2,
///   q_hat_3 = m_tot q3,       q_hat_4 = h_zz q4.
std::array<LinearSubsystem, 4> decouple(const VehicleParams& params,
                                        const CostWeights& weights);

/// Finite zeros of a channel's transfer function from its scaled input
/// to its first state coordinate. Lateral channels carry alpha*s^2 + g
/// in the numerator: a conjugate imaginary pair for alpha > 0, a real
/// mirror pair (one in the right half plane) for alpha < 0. At alpha = 0
/// and for the double-integrator channels there are no finite zeros.
struct TransferZeros {
  bool has_finite_zeros = false;
  std::array<std::complex<double>, 2> zeros{};
  bool non_minimum_phase = false;
};

TransferZeros transfer_zeros(const LinearSubsystem& subsystem);

/// RigidState-vector index of each coordinate of the stacked decoupled
/// state [x1 x2 x3 x4]; fixes the permutation between the two orderings
/// used in this library.
inline constexpr std::array<int, 12> kDecoupledStateIndex = {
    6, 0, 10, 4, 7, 1, 9, 3, 8, 2, 11, 5};

Vec12 to_decoupled_order(const Vec12& x);
Vec12 from_decoupled_order(const Vec12& x_bar);

}  // namespace paylift
