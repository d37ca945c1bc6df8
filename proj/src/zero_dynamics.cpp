#include "paylift/zero_dynamics.hpp"

#include <cmath>

namespace paylift {

namespace {

// Columns of the wrench map: thrust pushes along body z, torques act
// directly on the rotational block.
Eigen::Matrix<double, 6, 4> wrench_map(const EulerAngles& eta) {
  Eigen::Matrix<double, 6, 4> mf = Eigen::Matrix<double, 6, 4>::Zero();
  mf.col(0).head<3>() = rotation_zyx(eta).col(2);
  mf.bottomRightCorner<3, 3>().setIdentity();
  return mf;
}

Vec6 velocity_gravity_force(const VehicleParams& params,
                            const RigidState& state) {
  Vec6 vel;
  vel << state.v, state.omega;
  return coriolis_matrix(params, state) * vel +
         gravity_vector(params, state.eta);
}

}  // namespace

ControlInput io_linearizing_input(const VehicleParams& params,
                                  const RigidState& state,
                                  const Vec3& desired_acc,
                                  double desired_yaw_acc) {
  const Mat6 b = mass_matrix(params, state.eta);

  // m4 = [I 0; 0 e3^T] B^-1, built by solving against the selector rows.
  Eigen::Matrix<double, 6, 4> selector = Eigen::Matrix<double, 6, 4>::Zero();
  selector(0, 0) = selector(1, 1) = selector(2, 2) = 1.0;
  selector(5, 3) = 1.0;
  const Eigen::Matrix<double, 4, 6> m4 =
      b.ldlt().solve(selector).transpose();

  const Eigen::Matrix4d decoupling = m4 * wrench_map(state.eta);
  Eigen::FullPivLU<Eigen::Matrix4d> lu(decoupling);
  if (!lu.isInvertible()) {
    throw singular_decoupling(
        "wrench-to-output-acceleration map is singular at this attitude");
  }

  Vec4 commanded;
  commanded << desired_acc, desired_yaw_acc;
  const Vec4 wrench =
      lu.solve(commanded + m4 * velocity_gravity_force(params, state));
  return ControlInput::from_vector(wrench);
}

ZeroDynState zero_dynamics_derivative(const VehicleParams& params,
                                      const ZeroDynState& z) {
  RigidState s;
  s.omega = Vec3(z.z1, z.z2, 0.0);
  s.eta = EulerAngles{z.z3, z.z4, z.z5};

  const ControlInput pinning =
      io_linearizing_input(params, s, Vec3::Zero(), 0.0);
  const Vec6 residual = input_wrench(s.eta, pinning) -
                        velocity_gravity_force(params, s);
  // acc = [p_ddot; omega_dot]; the POI and yaw rows are zero by
  // construction of the pinning input.
  const Vec6 acc = mass_matrix(params, s.eta).ldlt().solve(residual);

  const Vec3 eta_dot = body_rate_map_inverse(s.eta) * s.omega;
  return ZeroDynState{acc(3), acc(4), eta_dot(0), eta_dot(1), eta_dot(2)};
}

ZeroDynClass classify_zero_dynamics(double alpha) {
  if (alpha < 0.0) return ZeroDynClass::UnstableZeroDynamics;
  if (alpha == 0.0) return ZeroDynClass::DegenerateAlphaZero;
  return ZeroDynClass::MarginallyStableLinearizedZeroDynamics;
}

ZeroDynJacobian zero_dynamics_jacobian(const VehicleParams& params) {
  const DerivedGeometry geom = derive_geometry(params);
  if (geom.alpha == 0.0) {
    throw degenerate_geometry(
        "POI at the combined CoG height: the roll/pitch restoring ratio "
        "-g/alpha has a pole, no eigenvalue formula applies");
  }

  ZeroDynJacobian result;
  result.matrix(0, 2) = -params.g / geom.alpha;
  result.matrix(1, 3) = -params.g / geom.alpha;
  result.matrix(2, 0) = 1.0;
  result.matrix(3, 1) = 1.0;

  const std::complex<double> lambda =
      std::sqrt(std::complex<double>(-params.g / geom.alpha, 0.0));
  result.verdict.alpha = geom.alpha;
  result.verdict.eigenvalues = {lambda, lambda, -lambda, -lambda,
                                std::complex<double>(0.0, 0.0)};
  result.verdict.classification = classify_zero_dynamics(geom.alpha);
  return result;
}

Vec4 planar_zero_dynamics(const VehicleParams& params, double phi,
                          double theta, double dphi, double dtheta) {
  const Mat3 off = params.h_tot - Mat3(params.h_tot.diagonal().asDiagonal());
  if (off.norm() > 1e-12) {
    throw std::invalid_argument(
        "planar reduction requires a diagonal inertia matrix");
  }
  const DerivedGeometry geom = derive_geometry(params);
  if (params.r_pl.head<2>().norm() > 1e-12 ||
      params.r_poi.head<2>().norm() > 1e-12) {
    throw std::invalid_argument(
        "planar reduction requires payload and POI on the body z axis");
  }
  const double rz = geom.r_hat.z();
  if (rz == 0.0) {
    throw degenerate_geometry("planar reduction is singular for r_z = 0");
  }
  const double cphi = std::cos(phi);
  const double ctheta = std::cos(theta);
  if (std::abs(cphi) < 1e-9 || std::abs(ctheta) < 1e-9) {
    throw std::domain_error(
        "planar reduction is singular at |phi| = pi/2 or |theta| = pi/2");
  }

  const double tphi = std::tan(phi);
  const double ttheta = std::tan(theta);
  Vec4 d;
  d(0) = -params.g * std::sin(phi) / (rz * ctheta) + ttheta * dphi * dtheta +
         tphi * dtheta * dtheta / (ctheta * ctheta);
  d(1) = -params.g * std::sin(theta) * cphi / rz - tphi * dphi * dtheta;
  d(2) = dphi;
  d(3) = dtheta;
  return d;
}

}  // namespace paylift
