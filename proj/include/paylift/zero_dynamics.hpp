#pragma once

#include <array>
#include <complex>

#include "paylift/vehicle.hpp"

namespace paylift {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

/// The 4x4 map from rotor wrench to commanded output accelerations
/// (POI acceleration, body yaw acceleration) lost rank, so the wrench
/// cannot realize arbitrary output accelerations at this attitude.
class singular_decoupling : public std::domain_error {
 public:
  explicit singular_decoupling(const std::string& what)
      : std::domain_error(what) {}
};

/// alpha = 0: the POI sits exactly at the combined CoG height, where the
/// attitude-dynamics linearization has a pole and no eigenvalue formula
/// applies.
class degenerate_geometry : public std::domain_error {
 public:
  explicit degenerate_geometry(const std::string& what)
      : std::domain_error(what) {}
};

/// Internal (attitude) state left over once the POI position and the body
/// yaw rate are pinned to zero. Also serves as its own derivative type.
struct ZeroDynState {
  double z1 = 0.0;  // body roll rate omega_x [rad/s]
  double z2 = 0.0;  // body pitch rate omega_y [rad/s]
  double z3 = 0.0;  // roll angle phi [rad]
  double z4 = 0.0;  // pitch angle theta [rad], |z4| < pi/2
  double z5 = 0.0;  // yaw angle psi [rad]

  Vec5 to_vector() const {
    Vec5 z;
    z << z1, z2, z3, z4, z5;
    return z;
  }
  static ZeroDynState from_vector(const Vec5& z) {
    return ZeroDynState{z(0), z(1), z(2), z(3), z(4)};
  }
};

enum class ZeroDynClass {
  UnstableZeroDynamics,                    // alpha < 0
  DegenerateAlphaZero,                     // alpha = 0, formula pole
  MarginallyStableLinearizedZeroDynamics,  // alpha > 0
};

/// Classification of the internal dynamics by the sign of alpha.
ZeroDynClass classify_zero_dynamics(double alpha);

/// Eigenvalue verdict for the linearized internal dynamics.
struct StabilityVerdict {
  double alpha = 0.0;
  std::array<std::complex<double>, 5> eigenvalues{};  // closed form
  ZeroDynClass classification = ZeroDynClass::DegenerateAlphaZero;
};

struct ZeroDynJacobian {
  Mat5 matrix = Mat5::Zero();
  StabilityVerdict verdict;
};

/// Wrench that makes the POI acceleration and the body yaw acceleration
/// track the commanded values exactly (input-output linearization).
/// Throws singular_decoupling when the 4x4 map from wrench to output
/// acceleration is not invertible, singular_attitude near |theta| = pi/2.
ControlInput io_linearizing_input(const VehicleParams& params,
                                  const RigidState& state,
                                  const Vec3& desired_acc,
                                  double desired_yaw_acc);

/// Derivative of the internal state with the outputs pinned at zero:
/// the roll/pitch rate derivatives come from the full dynamics driven by
/// io_linearizing_input with zero commands, the angle derivatives from
/// eta_dot = Gamma^-1 * (z1, z2, 0).
ZeroDynState zero_dynamics_derivative(const VehicleParams& params,
                                      const ZeroDynState& z);

/// Jacobian of the internal dynamics at the origin, in closed form:
/// -g/alpha at (0,2) and (1,3), ones at (2,0) and (3,1), zero elsewhere.
/// Eigenvalues are {+lambda, +lambda, -lambda, -lambda, 0} with
/// lambda = sqrt(-g/alpha): real pairs for alpha < 0 (unstable), imaginary
/// pairs for alpha > 0 (marginally stable linearization).
/// Throws degenerate_geometry when alpha = 0.
ZeroDynJacobian zero_dynamics_jacobian(const VehicleParams& params);

/// Roll/pitch internal dynamics for a symmetric vehicle (diagonal h_tot)
/// with payload and POI on the body z axis. With the POI and yaw rate
/// pinned, the assembly swings like a spherical pendulum of length r_z
/// about the POI (the pinning wrench absorbs every inertia torque, so no
/// moment of inertia appears). In ZYX angles under the omega_z = 0 gauge:
///   phi_ddot   = -g sin(phi) / (r_z cos(theta))
///                + tan(theta) phi_dot theta_dot
///                + tan(phi) theta_dot^2 / cos^2(theta)
///   theta_ddot = -g sin(theta) cos(phi) / r_z - tan(phi) phi_dot theta_dot
/// where r_z is the z component of the CoG-to-POI lever arm. Returns
/// (phi_ddot, theta_ddot, phi_dot, theta_dot).
/// Throws std::invalid_argument when the geometry violates the symmetry
/// assumptions, degenerate_geometry when r_z = 0, std::domain_error when
/// cos(phi) or cos(theta) vanishes.
Vec4 planar_zero_dynamics(const VehicleParams& params, double phi,
                          double theta, double dphi, double dtheta);

}  // namespace paylift
