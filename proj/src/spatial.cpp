#include "paylift/spatial.hpp"

#include <cmath>
#include <string>

namespace paylift {

namespace {

void check_pitch(double theta) {
  if (std::abs(theta) >= M_PI_2 - kPitchMargin) {
    throw singular_attitude(theta);
  }
}

}  // namespace

singular_attitude::singular_attitude(double theta)
    : std::domain_error("attitude too close to pitch singularity: theta = " +
                        std::to_string(theta)),
      theta_(theta) {}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
      -a.y(), a.x(), 0.0;
  return s;
}

Mat3 rotation_zyx(const EulerAngles& eta) {
  const double cf = std::cos(eta.phi), sf = std::sin(eta.phi);
  const double ct = std::cos(eta.theta), st = std::sin(eta.theta);
  const double cp = std::cos(eta.psi), sp = std::sin(eta.psi);
  Mat3 r;
  r << cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
       sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,
       -st, ct * sf, ct * cf;
  return r;
}

Mat3 rotation_rate(const Mat3& r, const Vec3& omega) {
  return r * skew(omega);
}

Mat3 body_rate_map(const EulerAngles& eta) {
  check_pitch(eta.theta);
  const double cf = std::cos(eta.phi), sf = std::sin(eta.phi);
  const double ct = std::cos(eta.theta), st = std::sin(eta.theta);
  Mat3 g;
  g << 1.0, 0.0, -st,
       0.0, cf, sf * ct,
       0.0, -sf, cf * ct;
  return g;
}

Mat3 body_rate_map_inverse(const EulerAngles& eta) {
  check_pitch(eta.theta);
  const double cf = std::cos(eta.phi), sf = std::sin(eta.phi);
  const double ct = std::cos(eta.theta), tt = std::tan(eta.theta);
  Mat3 gi;
  gi << 1.0, sf * tt, cf * tt,
        0.0, cf, -sf,
        0.0, sf / ct, cf / ct;
  return gi;
}

Mat3 body_rate_map_derivative(const EulerAngles& eta, const Vec3& eta_dot) {
  check_pitch(eta.theta);
  const double cf = std::cos(eta.phi), sf = std::sin(eta.phi);
  const double ct = std::cos(eta.theta), st = std::sin(eta.theta);
  const double fd = eta_dot.x(), td = eta_dot.y();
  Mat3 gd;
  gd << 0.0, 0.0, -ct * td,
        0.0, -sf * fd, cf * ct * fd - sf * st * td,
        0.0, -cf * fd, -sf * ct * fd - cf * st * td;
  return gd;
}

RotationPartials rotation_partials(const EulerAngles& eta) {
  const double cf = std::cos(eta.phi), sf = std::sin(eta.phi);
  const double ct = std::cos(eta.theta), st = std::sin(eta.theta);
  const double cp = std::cos(eta.psi), sp = std::sin(eta.psi);

  // Rows of R^T are columns of R; differentiate columnwise and transpose.
  Mat3 dr_phi, dr_theta, dr_psi;  // partials of R itself
  dr_phi << 0.0, cp * st * cf + sp * sf, -cp * st * sf + sp * cf,
            0.0, sp * st * cf - cp * sf, -sp * st * sf - cp * cf,
            0.0, ct * cf, -ct * sf;
  dr_theta << -cp * st, cp * ct * sf, cp * ct * cf,
              -sp * st, sp * ct * sf, sp * ct * cf,
              -ct, -st * sf, -st * cf;
  dr_psi << -sp * ct, -sp * st * sf - cp * cf, -sp * st * cf + cp * sf,
            cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
            0.0, 0.0, 0.0;

  RotationPartials out;
  out.d_phi = dr_phi.transpose();
  out.d_theta = dr_theta.transpose();
  out.d_psi = dr_psi.transpose();
  return out;
}

}  // namespace paylift
