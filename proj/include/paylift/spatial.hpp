#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace paylift {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// ZYX Euler angles (roll phi about body x, pitch theta about body y,
/// yaw psi about body z). Attitude is R = Rz(psi) * Ry(theta) * Rx(phi),
/// mapping body-frame vectors into the inertial frame.
struct EulerAngles {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
};

/// Thrown when an operation is evaluated too close to the pitch
/// singularity of the ZYX parametrization (|theta| -> pi/2), where the
/// Euler-rate map loses rank.
class singular_attitude : public std::domain_error {
 public:
  explicit singular_attitude(double theta);
  double theta() const { return theta_; }

 private:
  double theta_;
};

/// Margin used by the singularity guard: |theta| >= pi/2 - kPitchMargin
/// is rejected rather than silently producing an ill-conditioned map.
inline constexpr double kPitchMargin = 1e-6;

/// Cross-product matrix: skew(a) * b == a x b.
Mat3 skew(const Vec3& a);

/// Body-to-inertial rotation for ZYX Euler angles.
Mat3 rotation_zyx(const EulerAngles& eta);

/// Attitude kinematics: dR/dt = R * skew(omega) for body angular rate omega.
Mat3 rotation_rate(const Mat3& r, const Vec3& omega);

/// Euler-rate to body-rate map: omega = body_rate_map(eta) * eta_dot.
/// Throws singular_attitude near |theta| = pi/2.
Mat3 body_rate_map(const EulerAngles& eta);

/// Closed-form inverse of body_rate_map. Throws singular_attitude near
/// |theta| = pi/2 (the map is singular there).
Mat3 body_rate_map_inverse(const EulerAngles& eta);

/// Time derivative of body_rate_map along Euler rates eta_dot.
Mat3 body_rate_map_derivative(const EulerAngles& eta, const Vec3& eta_dot);

/// Partial derivatives of the transposed rotation with respect to each
/// Euler angle. Used by the velocity-product terms of the rigid-body
/// equations, where the chain rule d(R^T)/dt = sum_k dRT_k * eta_dot_k
/// appears contracted against the Euler-rate map.
struct RotationPartials {
  Mat3 d_phi;    // d(R^T)/d(phi)
  Mat3 d_theta;  // d(R^T)/d(theta)
  Mat3 d_psi;    // d(R^T)/d(psi)
};

RotationPartials rotation_partials(const EulerAngles& eta);

}  // namespace paylift
