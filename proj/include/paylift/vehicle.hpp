#pragma once

#include "paylift/spatial.hpp"

namespace paylift {

using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

/// Physical description of a multirotor with a rigidly attached payload.
/// Body frame origin sits at the UAV center of gravity (rotor plane
/// center); the inertial frame is z-up (NWU-style).
struct VehicleParams {
  double m_uav = 0.0;  // UAV mass [kg]
  double m_pl = 0.0;   // payload mass [kg], may be zero
  Vec3 r_pl = Vec3::Zero();   // payload CoG, body frame [m]
  Vec3 r_poi = Vec3::Zero();  // controlled point of interest, body frame [m]
  Mat3 h_tot = Mat3::Identity();  // UAV inertia about the body origin plus
                                  // payload inertia about its own CoG, both
                                  // in body axes [kg m^2]
  double g = 9.81;  // gravitational acceleration [m/s^2]

  /// Throws std::invalid_argument when masses or inertia are not physical
  /// (m_uav <= 0, m_pl < 0, h_tot not symmetric positive definite, g <= 0).
  void validate() const;
};

/// Quantities derived from the mass distribution.
struct DerivedGeometry {
  double m_tot = 0.0;  // combined mass
  Vec3 r_cog = Vec3::Zero();  // combined CoG, body frame
  Vec3 r_hat = Vec3::Zero();  // lever arm r_poi - r_cog, body frame
  double alpha = 0.0;  // vertical offset of the POI above the combined CoG
                       // (body z component of r_hat)
  Mat3 h_cog = Mat3::Zero();  // rotational inertia about the combined CoG
};

DerivedGeometry derive_geometry(const VehicleParams& params);

/// Rigid-body state expressed at the point of interest. Vector layout is
/// [v, omega, p, eta] (POI velocity, body rate, POI position, ZYX angles).
struct RigidState {
  Vec3 v = Vec3::Zero();      // inertial velocity of the POI
  Vec3 omega = Vec3::Zero();  // body angular rate
  Vec3 p = Vec3::Zero();      // inertial position of the POI
  EulerAngles eta;

  Vec12 to_vector() const;
  static RigidState from_vector(const Vec12& x);
};

/// Rotor wrench: collective thrust along body z plus three body torques.
struct ControlInput {
  double thrust = 0.0;
  Vec3 torque = Vec3::Zero();

  Vec4 to_vector() const { return Vec4(thrust, torque.x(), torque.y(), torque.z()); }
  static ControlInput from_vector(const Vec4& u) {
    return ControlInput{u(0), Vec3(u(1), u(2), u(3))};
  }
};

/// Generalized force of the rotor wrench in POI coordinates:
/// [thrust * R * e3; torque]. Thrust acts along the body z axis.
Vec6 input_wrench(const EulerAngles& eta, const ControlInput& input);

/// Inertia matrix B(eta) of the equations of motion
///   B(eta) [v_dot; omega_dot] + C(state) [v; omega] + G(eta) = input_wrench.
/// Symmetric positive definite; it is the kinetic-energy metric in
/// (v, omega) coordinates.
Mat6 mass_matrix(const VehicleParams& params, const EulerAngles& eta);

/// Velocity-product matrix C of the equations above. Not unique as a
/// matrix; the product C * [v; omega] is what the dynamics pin down, and
/// the returned factorization preserves the power-balance identity
/// u^T (Bdot - 2C) u = 0 along trajectories.
Mat6 coriolis_matrix(const VehicleParams& params, const RigidState& state);

/// Gravity wrench G(eta); the gradient of the potential energy taken in
/// POI translation / body-rate coordinates. The torque block is
/// m_tot * g * skew(r_hat)^T * Gamma(eta) * e3, which vanishes exactly
/// when r_hat is aligned with the body z axis.
Vec6 gravity_vector(const VehicleParams& params, const EulerAngles& eta);

/// Full nonlinear state derivative. Solves the 6x6 linear system for the
/// accelerations (no explicit inverse) and maps body rates to Euler rates.
/// Layout of the result matches RigidState::to_vector.
/// Throws singular_attitude near |theta| = pi/2.
Vec12 nonlinear_derivative(const VehicleParams& params, const RigidState& state,
                           const ControlInput& input);

struct EnergyBreakdown {
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

/// Kinetic plus potential energy of the rigid assembly; conserved under
/// zero input. Potential is measured from inertial z = 0 at the CoG.
EnergyBreakdown energy(const VehicleParams& params, const RigidState& state);

}  // namespace paylift
