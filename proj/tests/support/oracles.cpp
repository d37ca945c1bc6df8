#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace paylift::testing {
namespace {

// Long-double kinematics, written from scratch so the oracle shares no code
// with the library. Rotation is built as an explicit product Rz*Ry*Rx and
// differentiated factor by factor.
using LMat3 = Eigen::Matrix<long double, 3, 3>;
using LVec3 = Eigen::Matrix<long double, 3, 1>;

LMat3 rot_x(long double a) {
  LMat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

LMat3 rot_y(long double a) {
  LMat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

LMat3 rot_z(long double a) {
  LMat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

LMat3 drot_x(long double a) {
  LMat3 m;
  m << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
  return m;
}

LMat3 drot_y(long double a) {
  LMat3 m;
  m << -std::sin(a), 0, std::cos(a), 0, 0, 0, -std::cos(a), 0, -std::sin(a);
  return m;
}

LMat3 drot_z(long double a) {
  LMat3 m;
  m << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
  return m;
}

LMat3 rot(const LVec3& eta) {
  return rot_z(eta(2)) * rot_y(eta(1)) * rot_x(eta(0));
}

// dR/dt for given angle rates, by the product rule on the three factors.
LMat3 rot_dot(const LVec3& eta, const LVec3& etad) {
  return rot_z(eta(2)) * rot_y(eta(1)) * drot_x(eta(0)) * etad(0) +
         rot_z(eta(2)) * drot_y(eta(1)) * rot_x(eta(0)) * etad(1) +
         drot_z(eta(2)) * rot_y(eta(1)) * rot_x(eta(0)) * etad(2);
}

LVec3 vee(const LMat3& s) {
  return LVec3(s(2, 1), s(0, 2), s(1, 0));
}

struct EnergyLD {
  long double kinetic;
  long double potential;
};

// UAV CoG at the body origin, payload CoG at r_pl. The tracked point p
// sits at r_poi on the body, so each CoG position is p plus a rotated
// body-fixed offset. Own-CoG rotational energies sum to the h_tot
// quadratic. No combined-CoG quantities are ever formed here.
EnergyLD energy_ld(const VehicleParams& params, const LVec3& p,
                   const LVec3& eta, const LVec3& pd, const LVec3& etad) {
  const LVec3 r_poi = params.r_poi.cast<long double>();
  const LVec3 r_pl = params.r_pl.cast<long double>();
  const LMat3 h_tot = params.h_tot.cast<long double>();
  const long double m_uav = params.m_uav;
  const long double m_pl = params.m_pl;
  const long double g = params.g;

  const LMat3 r = rot(eta);
  const LMat3 rd = rot_dot(eta, etad);
  const LVec3 omega = vee((r.transpose() * rd).eval());

  const LVec3 v_uav = pd - rd * r_poi;
  const LVec3 v_pl = pd + rd * (r_pl - r_poi);
  const LVec3 p_uav = p - r * r_poi;
  const LVec3 p_pl = p + r * (r_pl - r_poi);

  EnergyLD e;
  e.kinetic = 0.5L * m_uav * v_uav.squaredNorm() +
              0.5L * m_pl * v_pl.squaredNorm() +
              0.5L * omega.dot(h_tot * omega);
  e.potential = g * (m_uav * p_uav(2) + m_pl * p_pl(2));
  return e;
}

long double lagrangian_ld(const VehicleParams& params, const LVec3& p,
                          const LVec3& eta, const LVec3& pd,
                          const LVec3& etad) {
  const EnergyLD e = energy_ld(params, p, eta, pd, etad);
  return e.kinetic - e.potential;
}

}  // namespace

TwoBodyEnergy two_body_energy(const VehicleParams& params, const Vec3& p,
                              const Vec3& eta, const Vec3& pd,
                              const Vec3& etad) {
  const EnergyLD e =
      energy_ld(params, p.cast<long double>(), eta.cast<long double>(),
                pd.cast<long double>(), etad.cast<long double>());
  return TwoBodyEnergy{static_cast<double>(e.kinetic),
                       static_cast<double>(e.potential)};
}

double lagrangian(const VehicleParams& params, const Vec3& p, const Vec3& eta,
                  const Vec3& pd, const Vec3& etad) {
  return static_cast<double>(
      lagrangian_ld(params, p.cast<long double>(), eta.cast<long double>(),
                    pd.cast<long double>(), etad.cast<long double>()));
}

Vec6 euler_lagrange_fd(const VehicleParams& params, const SmoothTrajectory& traj,
                       double t) {
  // d/dt(dL/dqd) - dL/dq with every derivative a central difference: the
  // momentum gradient is evaluated on the trajectory at t +/- h_t and
  // differenced in time, so no analytic dynamics enter anywhere. All
  // arithmetic stays in long double to keep the nested differences clean.
  using LVec6 = Eigen::Matrix<long double, 6, 1>;
  const long double h_t = 1e-4L;
  const long double h_v = 1e-6L;
  const long double h_q = 1e-6L;

  const auto momentum = [&](long double s) {
    Vec3 p, pd, pdd, eta, etad, etadd;
    traj.eval(static_cast<double>(s), p, pd, pdd, eta, etad, etadd);
    const LVec3 lp = p.cast<long double>();
    const LVec3 leta = eta.cast<long double>();
    const LVec3 lpd = pd.cast<long double>();
    const LVec3 letad = etad.cast<long double>();
    LVec6 grad;
    for (int i = 0; i < 6; ++i) {
      LVec3 pd_hi = lpd, pd_lo = lpd, etad_hi = letad, etad_lo = letad;
      if (i < 3) {
        pd_hi(i) += h_v;
        pd_lo(i) -= h_v;
      } else {
        etad_hi(i - 3) += h_v;
        etad_lo(i - 3) -= h_v;
      }
      grad(i) = (lagrangian_ld(params, lp, leta, pd_hi, etad_hi) -
                 lagrangian_ld(params, lp, leta, pd_lo, etad_lo)) /
                (2.0L * h_v);
    }
    return grad;
  };

  const LVec6 dmom =
      (momentum(static_cast<long double>(t) + h_t) -
       momentum(static_cast<long double>(t) - h_t)) /
      (2.0L * h_t);

  Vec3 p, pd, pdd, eta, etad, etadd;
  traj.eval(t, p, pd, pdd, eta, etad, etadd);
  const LVec3 lp = p.cast<long double>();
  const LVec3 leta = eta.cast<long double>();
  const LVec3 lpd = pd.cast<long double>();
  const LVec3 letad = etad.cast<long double>();
  LVec6 dq;
  for (int i = 0; i < 6; ++i) {
    LVec3 p_hi = lp, p_lo = lp, eta_hi = leta, eta_lo = leta;
    if (i < 3) {
      p_hi(i) += h_q;
      p_lo(i) -= h_q;
    } else {
      eta_hi(i - 3) += h_q;
      eta_lo(i - 3) -= h_q;
    }
    dq(i) = (lagrangian_ld(params, p_hi, eta_hi, lpd, letad) -
             lagrangian_ld(params, p_lo, eta_lo, lpd, letad)) /
            (2.0L * h_q);
  }

  return (dmom - dq).cast<double>();
}

std::vector<std::complex<double>> transmission_zeros(
    const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
    const Eigen::RowVectorXd& c) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd pencil = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(n + 1, n + 1);
  pencil.topLeftCorner(n, n) = a;
  pencil.topRightCorner(n, 1) = b;
  pencil.bottomLeftCorner(1, n) = c;
  weight.topLeftCorner(n, n).setIdentity();

  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> solver(pencil, weight, true);
  std::vector<std::complex<double>> zeros;
  for (Eigen::Index i = 0; i < solver.alphas().size(); ++i) {
    const std::complex<double> num = solver.alphas()(i);
    const double den = solver.betas()(i);
    // Infinite eigenvalues of the pencil (the relative-degree directions)
    // come out with beta ~ machine epsilon; anything this far from zero is
    // a genuine transmission zero.
    if (std::abs(den) > 1e-7 * std::max(1.0, std::abs(num))) {
      zeros.push_back(num / den);
    }
  }
  return zeros;
}

Eigen::MatrixXd are_solution(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const Eigen::MatrixXd& q,
                             const Eigen::MatrixXd& r) {
  // Everything runs in long double: the weight grid spans eight orders of
  // magnitude and in plain double the Newton polish bottoms out around
  // 1e-8 relative, which is exactly the agreement the tests must resolve.
  using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  using MatCLD = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic,
                               Eigen::Dynamic>;
  const Eigen::Index n = a.rows();
  const MatLD al = a.cast<long double>();
  const MatLD bl = b.cast<long double>();
  const MatLD ql = q.cast<long double>();
  const MatLD gain =
      bl * r.cast<long double>().llt().solve(bl.transpose()).eval();

  MatLD ham(2 * n, 2 * n);
  ham.topLeftCorner(n, n) = al;
  ham.topRightCorner(n, n) = -gain;
  ham.bottomLeftCorner(n, n) = -ql;
  ham.bottomRightCorner(n, n) = -al.transpose();

  const Eigen::EigenSolver<MatLD> eig(ham);
  // Stable invariant subspace: the n eigenvectors with the most negative
  // real parts (the spectrum is symmetric about the imaginary axis).
  std::vector<Eigen::Index> order(static_cast<size_t>(2 * n));
  for (Eigen::Index i = 0; i < 2 * n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index m) {
    return eig.eigenvalues()(l).real() < eig.eigenvalues()(m).real();
  });
  MatCLD basis(2 * n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    basis.col(k) = eig.eigenvectors().col(order[static_cast<size_t>(k)]);
  }

  const MatCLD x1 = basis.topRows(n);
  const MatCLD x2 = basis.bottomRows(n);
  MatLD p = (x2 * x1.fullPivLu().solve(MatCLD::Identity(n, n))).real();
  p = ((p + p.transpose()) / 2.0L).eval();

  // Newton polish: each step solves the Lyapunov equation
  //   (a - gain p)ᵀ d + d (a - gain p) = -residual
  // through its n²xn² Kronecker form. Quadratic convergence from the
  // eigenvector solution; two or three steps reach roundoff.
  for (int iter = 0; iter < 10; ++iter) {
    const MatLD residual =
        al.transpose() * p + p * al - p * gain * p + ql;
    if (residual.norm() <=
        1e-17L * std::max<long double>(1.0L, ql.norm() + p.norm())) {
      break;
    }
    const MatLD f = al - gain * p;
    MatLD system(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        // coefficient of d(k,l) in equation (i,j): fᵀd gives f(k,i) when
        // l == j, d f gives f(l,j) when k == i; vec index is k + l*n
        for (Eigen::Index k2 = 0; k2 < n; ++k2) {
          for (Eigen::Index l2 = 0; l2 < n; ++l2) {
            long double coeff = 0.0L;
            if (l2 == j) coeff += f(k2, i);
            if (k2 == i) coeff += f(l2, j);
            system(i + j * n, k2 + l2 * n) = coeff;
          }
        }
      }
    }
    VecLD rhs(n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        rhs(i + j * n) = -residual(i, j);
      }
    }
    const VecLD delta = system.fullPivLu().solve(rhs);
    MatLD d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        d(i, j) = delta(i + j * n);
      }
    }
    p = (p + (d + d.transpose()) / 2.0L).eval();
  }
  return p.cast<double>();
}

}  // namespace paylift::testing
