#include "paylift/vehicle.hpp"

#include <stdexcept>

namespace paylift {

void VehicleParams::validate() const {
  if (!(m_uav > 0.0)) {
    throw std::invalid_argument("m_uav must be positive");
  }
  if (m_pl < 0.0) {
    throw std::invalid_argument("m_pl must be nonnegative");
  }
  if (!(g > 0.0)) {
    throw std::invalid_argument("g must be positive");
  }
  if (!h_tot.isApprox(h_tot.transpose(), 1e-12)) {
    throw std::invalid_argument("h_tot must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(h_tot);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("h_tot must be positive definite");
  }
}

DerivedGeometry derive_geometry(const VehicleParams& params) {
  DerivedGeometry geom;
  geom.m_tot = params.m_uav + params.m_pl;
  geom.r_cog = (params.m_pl / geom.m_tot) * params.r_pl;
  geom.r_hat = params.r_poi - geom.r_cog;
  geom.alpha = geom.r_hat.z();
  // Parallel-axis shift of the origin inertia to the combined CoG.
  // The symmetric product is formed first so h_cog is bitwise symmetric.
  const Mat3 s = skew(params.r_pl);
  geom.h_cog =
      (params.m_uav * params.m_pl / geom.m_tot) * (s.transpose() * s).eval() +
      params.h_tot;
  return geom;
}

Vec12 RigidState::to_vector() const {
  Vec12 x;
  x << v, omega, p, eta.phi, eta.theta, eta.psi;
  return x;
}

RigidState RigidState::from_vector(const Vec12& x) {
  RigidState s;
  s.v = x.segment<3>(0);
  s.omega = x.segment<3>(3);
  s.p = x.segment<3>(6);
  s.eta = EulerAngles{x(9), x(10), x(11)};
  return s;
}

Vec6 input_wrench(const EulerAngles& eta, const ControlInput& input) {
  Vec6 u;
  u.head<3>() = input.thrust * rotation_zyx(eta).col(2);
  u.tail<3>() = input.torque;
  return u;
}

Mat6 mass_matrix(const VehicleParams& params, const EulerAngles& eta) {
  const DerivedGeometry geom = derive_geometry(params);
  const Mat3 r = rotation_zyx(eta);
  const Mat3 sr = skew(geom.r_hat);
  const Mat3 coupling = geom.m_tot * r * sr;

  Mat6 b;
  b.topLeftCorner<3, 3>() = geom.m_tot * Mat3::Identity();
  b.topRightCorner<3, 3>() = coupling;
  b.bottomLeftCorner<3, 3>() = coupling.transpose();
  b.bottomRightCorner<3, 3>() =
      geom.h_cog + geom.m_tot * (sr.transpose() * sr).eval();
  return b;
}

Mat6 coriolis_matrix(const VehicleParams& params, const RigidState& state) {
  const DerivedGeometry geom = derive_geometry(params);
  const Mat3 r = rotation_zyx(state.eta);
  const Mat3 sr = skew(geom.r_hat);
  const Mat3 sw = skew(state.omega);
  const Mat3 m1 = geom.h_cog + geom.m_tot * (sr.transpose() * sr).eval();
  const Mat3 m2 = sr * sw - sw * sr;

  // Convective term from the attitude dependence of the kinetic-energy
  // coupling: row i of m3 is m_tot * v^T * (sum_k Gammainv(k,i) dR/deta_k) * skew(r_hat).
  // The angle sum collapses to R * skew(e_i) since dR/deta_k = R * skew(Gamma e_k).
  const Mat3 gi = body_rate_map_inverse(state.eta);
  const RotationPartials parts = rotation_partials(state.eta);
  const Mat3* drt[3] = {&parts.d_phi, &parts.d_theta, &parts.d_psi};
  Mat3 m3;
  for (int i = 0; i < 3; ++i) {
    Mat3 dir = Mat3::Zero();
    for (int k = 0; k < 3; ++k) {
      dir += gi(k, i) * drt[k]->transpose();
    }
    m3.row(i) = geom.m_tot * state.v.transpose() * dir * sr;
  }

  Mat6 c;
  c.topLeftCorner<3, 3>().setZero();
  c.topRightCorner<3, 3>() = geom.m_tot * r * sw * sr;
  c.bottomLeftCorner<3, 3>() = geom.m_tot * m2 * r.transpose();
  c.bottomRightCorner<3, 3>() = sw * m1 - m3;
  return c;
}

Vec6 gravity_vector(const VehicleParams& params, const EulerAngles& eta) {
  const DerivedGeometry geom = derive_geometry(params);
  const Vec3 gamma_e3 = body_rate_map(eta).col(2);  // equals R^T e3 for ZYX
  Vec6 g;
  g.head<3>() = geom.m_tot * params.g * Vec3::UnitZ();
  g.tail<3>() =
      geom.m_tot * params.g * skew(geom.r_hat).transpose() * gamma_e3;
  return g;
}

Vec12 nonlinear_derivative(const VehicleParams& params, const RigidState& state,
                           const ControlInput& input) {
  const Mat6 b = mass_matrix(params, state.eta);
  const Mat6 c = coriolis_matrix(params, state);
  const Vec6 g = gravity_vector(params, state.eta);

  Vec6 vel;
  vel << state.v, state.omega;
  const Vec6 rhs = input_wrench(state.eta, input) - c * vel - g;
  const Vec6 acc = b.ldlt().solve(rhs);

  Vec12 dx;
  dx.segment<3>(0) = acc.head<3>();
  dx.segment<3>(3) = acc.tail<3>();
  dx.segment<3>(6) = state.v;
  dx.segment<3>(9) = body_rate_map_inverse(state.eta) * state.omega;
  return dx;
}

EnergyBreakdown energy(const VehicleParams& params, const RigidState& state) {
  const DerivedGeometry geom = derive_geometry(params);
  const Mat3 r = rotation_zyx(state.eta);
  const Vec3 p_cog = state.p - r * geom.r_hat;
  const Vec3 v_cog = state.v + r * skew(geom.r_hat) * state.omega;

  EnergyBreakdown e;
  e.kinetic = 0.5 * geom.m_tot * v_cog.squaredNorm() +
              0.5 * state.omega.dot(geom.h_cog * state.omega);
  e.potential = geom.m_tot * params.g * p_cog.z();
  e.total = e.kinetic + e.potential;
  return e;
}

}  // namespace paylift
