#include <doctest.h>

#include <cmath>
#include <random>

#include "paylift/linearization.hpp"
#include "paylift/zero_dynamics.hpp"
#include "support/oracles.hpp"

using namespace paylift;

namespace {

VehicleParams reference_params() {
  VehicleParams p;
  p.m_uav = 22.0;
  p.m_pl = 6.0;
  p.r_pl = Vec3(0.0, 0.0, 4.0);
  p.r_poi = Vec3(0.0, 0.0, 4.0);
  p.h_tot = Vec3(0.25, 0.25, 0.14).asDiagonal();
  return p;
}

// Off-axis geometry and a non-diagonal inertia: violates both decoupling
// assumptions on purpose.
VehicleParams skewed_params() {
  VehicleParams p;
  p.m_uav = 3.1;
  p.m_pl = 1.4;
  p.r_pl = Vec3(0.2, -0.35, 0.9);
  p.r_poi = Vec3(-0.15, 0.4, 0.55);
  Mat3 h;
  h << 0.11, 0.02, -0.01, 0.02, 0.14, 0.015, -0.01, 0.015, 0.09;
  p.h_tot = h;
  return p;
}

VehicleParams axis_params(double z_pl, double z_poi) {
  VehicleParams p = reference_params();
  p.r_pl = Vec3(0.0, 0.0, z_pl);
  p.r_poi = Vec3(0.0, 0.0, z_poi);
  return p;
}

// Massless payload puts alpha = z_poi directly.
VehicleParams bare_with_alpha(double alpha) {
  VehicleParams p;
  p.m_uav = 5.0;
  p.m_pl = 0.0;
  p.r_pl = Vec3::Zero();
  p.r_poi = Vec3(0.0, 0.0, alpha);
  p.h_tot = Vec3(0.21, 0.17, 0.3).asDiagonal();
  return p;
}

VehicleParams random_axis_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mass_uav(0.5, 25.0);
  std::uniform_real_distribution<double> mass_pl(0.0, 8.0);
  std::uniform_real_distribution<double> offset(-3.0, 3.0);
  std::uniform_real_distribution<double> inertia(0.02, 1.5);
  VehicleParams p;
  p.m_uav = mass_uav(rng);
  p.m_pl = mass_pl(rng);
  p.r_pl = Vec3(0.0, 0.0, offset(rng));
  p.r_poi = Vec3(0.0, 0.0, offset(rng));
  p.h_tot = Vec3(inertia(rng), inertia(rng), inertia(rng)).asDiagonal();
  return p;
}

Eigen::Matrix4d expected_lateral_a(double g_entry) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a(0, 1) = 1.0;
  a(1, 2) = g_entry;
  a(2, 3) = 1.0;
  return a;
}

}  // namespace

TEST_CASE("hover equilibrium balances gravity exactly") {
  SUBCASE("reference thrust and zero torque") {
    const auto [state, input] = hover_equilibrium(reference_params());
    CHECK(input.thrust == 28.0 * 9.81);
    CHECK(input.thrust == doctest::Approx(274.68));
    CHECK(input.torque.isZero(0.0));
    CHECK(state.to_vector().isZero(0.0));
  }
  SUBCASE("derivative vanishes at the pair") {
    for (const auto& p : {reference_params(), skewed_params(),
                          axis_params(-1.5, 2.0)}) {
      const auto [state, input] = hover_equilibrium(p);
      CHECK(nonlinear_derivative(p, state, input).isZero(0.0));
    }
  }
  SUBCASE("massless payload reduces to the bare vehicle") {
    VehicleParams p = reference_params();
    p.m_pl = 0.0;
    const auto [state, input] = hover_equilibrium(p);
    CHECK(input.thrust == 22.0 * 9.81);
  }
  SUBCASE("off-axis geometry needs a balancing torque") {
    const auto [state, input] = hover_equilibrium(skewed_params());
    CHECK(input.torque.norm() > 0.0);
  }
}

TEST_CASE("input scaling carries the lateral effective inertias") {
  const InputScaling s = input_scaling(reference_params());
  CHECK(s.b1 == 6.0 * 22.0 * 16.0 + 0.25 * 28.0);
  CHECK(s.b1 == 2119.0);
  CHECK(s.b2 == 2119.0);
  CHECK(s.psi(0, 0) == 1.0 / 28.0);
  CHECK(s.psi(1, 1) == 28.0 / 2119.0);
  CHECK(s.psi(2, 2) == 28.0 / 2119.0);
  CHECK(s.psi(3, 3) == 1.0 / 0.14);
  CHECK((s.psi - Eigen::Matrix4d(s.psi.diagonal().asDiagonal())).isZero(0.0));

  // Positive even with a massless payload, as long as the inertia is SPD.
  VehicleParams bare = bare_with_alpha(0.4);
  const InputScaling sb = input_scaling(bare);
  CHECK(sb.b1 > 0.0);
  CHECK(sb.b2 > 0.0);
}

TEST_CASE("assumption checks are hard errors that name the assumption") {
  SUBCASE("off-diagonal inertia") {
    VehicleParams p = reference_params();
    p.h_tot(0, 1) = p.h_tot(1, 0) = 1e-3;
    try {
      require_decoupling_assumptions(p);
      FAIL("expected assumption_violation");
    } catch (const assumption_violation& e) {
      CHECK(std::string(e.what()).find("inertia") != std::string::npos);
    }
  }
  SUBCASE("payload off the z axis") {
    VehicleParams p = reference_params();
    p.r_pl.x() = 1e-3;
    try {
      require_decoupling_assumptions(p);
      FAIL("expected assumption_violation");
    } catch (const assumption_violation& e) {
      CHECK(std::string(e.what()).find("r_pl") != std::string::npos);
    }
  }
  SUBCASE("point of interest off the z axis") {
    VehicleParams p = reference_params();
    p.r_poi.y() = -1e-3;
    CHECK_THROWS_AS(require_decoupling_assumptions(p), assumption_violation);
    CHECK_THROWS_AS(input_scaling(p), assumption_violation);
    CHECK_THROWS_AS(decouple(p, CostWeights{}), assumption_violation);
  }
  SUBCASE("tiny residues below the tolerance pass") {
    VehicleParams p = reference_params();
    p.r_pl.x() = 1e-14;
    p.h_tot(0, 1) = p.h_tot(1, 0) = 1e-15;
    CHECK_NOTHROW(require_decoupling_assumptions(p));
  }
  SUBCASE("the skewed fixture violates both") {
    CHECK_THROWS_AS(require_decoupling_assumptions(skewed_params()),
                    assumption_violation);
  }
}

TEST_CASE("numeric linearization reproduces the kinematic identity rows") {
  const LinearModel m = linearize_numeric(reference_params());
  Eigen::Matrix<double, 3, 12> expected_p = Eigen::Matrix<double, 3, 12>::Zero();
  expected_p.block<3, 3>(0, 0).setIdentity();
  CHECK((m.a.block<3, 12>(6, 0) - expected_p).cwiseAbs().maxCoeff() < 1e-9);

  Eigen::Matrix<double, 3, 12> expected_eta =
      Eigen::Matrix<double, 3, 12>::Zero();
  expected_eta.block<3, 3>(0, 3).setIdentity();
  CHECK((m.a.block<3, 12>(9, 0) - expected_eta).cwiseAbs().maxCoeff() < 1e-9);

  CHECK(m.a.allFinite());
  CHECK(m.b.allFinite());
  CHECK(m.equilibrium_input.thrust == doctest::Approx(274.68));
}

TEST_CASE("thrust column only reaches vertical acceleration on-axis") {
  const LinearModel m = linearize_numeric(axis_params(1.2, -0.7));
  for (int i = 0; i < 12; ++i) {
    if (i == 2) {
      CHECK(m.b(i, 0) == doctest::Approx(1.0 / 28.0).epsilon(1e-9));
    } else {
      CHECK(std::abs(m.b(i, 0)) < 1e-9);
    }
  }
}

TEST_CASE("numeric and closed-form linearizations agree") {
  const auto check_agreement = [](const VehicleParams& p) {
    const LinearModel numeric = linearize_numeric(p);
    const LinearModel closed = build_simplified(p, input_scaling(p));
    CHECK((numeric.a - closed.a).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((numeric.b - closed.b).cwiseAbs().maxCoeff() < 1e-6);
  };

  check_agreement(reference_params());
  check_agreement(axis_params(-1.0, -1.0));
  check_agreement(bare_with_alpha(0.786));

  std::mt19937_64 rng(0x11ea51f0cafeULL);
  for (int trial = 0; trial < 50; ++trial) {
    check_agreement(random_axis_params(rng));
  }
}

TEST_CASE("simplified model structure") {
  SUBCASE("alpha zero silences the lateral input rows") {
    VehicleParams p = reference_params();
    p.r_pl = Vec3(0.0, 0.0, 2.0);
    // Same float expression the geometry derivation uses, so alpha == 0.
    p.r_poi = Vec3(0.0, 0.0, (6.0 / 28.0) * 2.0);
    REQUIRE(derive_geometry(p).alpha == 0.0);
    const LinearModel m = build_simplified(p, input_scaling(p));
    CHECK(m.b.row(0).isZero(0.0));
    CHECK(m.b.row(1).isZero(0.0));
  }
  SUBCASE("a is nilpotent of index four") {
    const LinearModel m = build_simplified(reference_params(),
                                           input_scaling(reference_params()));
    const Mat12 a2 = m.a * m.a;
    CHECK_FALSE((a2 * m.a).isZero(0.0));
    CHECK((a2 * a2).isZero(0.0));
    // The defective spectrum is ill-conditioned for QR iteration, so the
    // eigensolver bound is loose; a^4 == 0 above is the exact statement.
    Eigen::EigenSolver<Mat12> eig(m.a);
    CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() < 1e-2);
  }
  SUBCASE("gravity entries sit in the tilt columns") {
    const LinearModel m = build_simplified(reference_params(),
                                           input_scaling(reference_params()));
    CHECK(m.a(0, 10) == 9.81);
    CHECK(m.a(1, 9) == -9.81);
  }
}

TEST_CASE("decoupled channels match the closed forms") {
  const VehicleParams p = reference_params();
  CostWeights w;
  w.q1 = w.q2 = w.q3 = w.q4 = 5.0;
  const auto subs = decouple(p, w);

  SUBCASE("scaled weights") {
    CHECK(subs[0].q_hat == doctest::Approx(2119.0 / 28.0 * 5.0).epsilon(1e-15));
    CHECK(subs[0].q_hat == doctest::Approx(378.392857142857).epsilon(1e-12));
    CHECK(subs[1].q_hat == doctest::Approx(2119.0 / 28.0 * 5.0).epsilon(1e-15));
    CHECK(subs[2].q_hat == 140.0);
    CHECK(subs[3].q_hat == doctest::Approx(0.7));
  }
  SUBCASE("matrices") {
    const double alpha = derive_geometry(p).alpha;
    CHECK(alpha == doctest::Approx(22.0 / 7.0));
    CHECK((subs[0].a_i - expected_lateral_a(9.81)).isZero(0.0));
    CHECK((subs[1].a_i - expected_lateral_a(-9.81)).isZero(0.0));
    Eigen::Vector4d b1_expected(0.0, alpha, 0.0, 1.0);
    CHECK((subs[0].b_i - b1_expected).isZero(0.0));
    CHECK((subs[1].b_i + Eigen::Vector4d(0.0, alpha, 0.0, -1.0)).isZero(0.0));
    for (int k : {2, 3}) {
      CHECK(subs[k].a_i.rows() == 2);
      CHECK(subs[k].a_i(0, 1) == 1.0);
      CHECK(subs[k].a_i(0, 0) == 0.0);
      CHECK(subs[k].a_i(1, 0) == 0.0);
      CHECK(subs[k].a_i(1, 1) == 0.0);
      CHECK(subs[k].b_i(0) == 0.0);
      CHECK(subs[k].b_i(1) == 1.0);
      CHECK(subs[k].alpha == 0.0);
    }
    CHECK(subs[0].index == 1);
    CHECK(subs[3].index == 4);
  }
  SUBCASE("vertical and yaw channels ignore the placement") {
    const auto moved = decouple(axis_params(-2.3, 0.4), w);
    for (int k : {2, 3}) {
      CHECK((subs[k].a_i - moved[k].a_i).isZero(0.0));
      CHECK((subs[k].b_i - moved[k].b_i).isZero(0.0));
      CHECK(subs[k].q_hat == moved[k].q_hat);
    }
  }
  SUBCASE("weights must be positive") {
    CostWeights bad;
    bad.q2 = 0.0;
    CHECK_THROWS_AS(decouple(p, bad), std::invalid_argument);
    bad.q2 = -1.0;
    CHECK_THROWS_AS(decouple(p, bad), std::invalid_argument);
  }
}

TEST_CASE("decoupled order is a permutation consistent with the full model") {
  SUBCASE("round trip and spot values") {
    Vec12 x;
    for (int i = 0; i < 12; ++i) x(i) = 100.0 + i;
    const Vec12 xb = to_decoupled_order(x);
    CHECK(xb(0) == x(6));    // x position leads channel 1
    CHECK(xb(2) == x(10));   // theta
    CHECK(xb(3) == x(4));    // omega_y
    CHECK(xb(4) == x(7));    // y position leads channel 2
    CHECK(xb(9) == x(2));    // vertical velocity
    CHECK(xb(11) == x(5));   // omega_z
    CHECK((from_decoupled_order(xb) - x).isZero(0.0));
  }
  SUBCASE("permuting the simplified model block-diagonalizes it") {
    const VehicleParams p = axis_params(0.8, -0.9);
    CostWeights w;
    const InputScaling scaling = input_scaling(p);
    const LinearModel m = build_simplified(p, scaling);
    const auto subs = decouple(p, w);

    Mat12 perm = Mat12::Zero();
    for (int k = 0; k < 12; ++k) perm(k, kDecoupledStateIndex[k]) = 1.0;

    Mat12 block = Mat12::Zero();
    block.block<4, 4>(0, 0) = subs[0].a_i;
    block.block<4, 4>(4, 4) = subs[1].a_i;
    block.block<2, 2>(8, 8) = subs[2].a_i;
    block.block<2, 2>(10, 10) = subs[3].a_i;
    CHECK((perm * m.a * perm.transpose() - block).isZero(0.0));

    // Undo the raw-input scaling, then each channel's column must be its
    // b_i in the stacked layout: thrust drives channel 3, roll torque
    // channel 2, pitch torque channel 1, yaw torque channel 4.
    Eigen::Matrix4d psi_inv = Eigen::Vector4d(1.0 / scaling.psi(0, 0),
                                              1.0 / scaling.psi(1, 1),
                                              1.0 / scaling.psi(2, 2),
                                              1.0 / scaling.psi(3, 3))
                                  .asDiagonal();
    const Mat12x4 b_hat = perm * m.b * psi_inv;
    Mat12x4 b_expected = Mat12x4::Zero();
    b_expected.block<4, 1>(0, 2) = subs[0].b_i;
    b_expected.block<4, 1>(4, 1) = subs[1].b_i;
    b_expected.block<2, 1>(8, 0) = subs[2].b_i;
    b_expected.block<2, 1>(10, 3) = subs[3].b_i;
    CHECK((b_hat - b_expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("transfer zeros follow the placement sign") {
  CostWeights w;
  SUBCASE("above: imaginary pair, minimum phase") {
    const auto subs = decouple(bare_with_alpha(0.786), w);
    const TransferZeros z = transfer_zeros(subs[0]);
    REQUIRE(z.has_finite_zeros);
    CHECK_FALSE(z.non_minimum_phase);
    const double expected = std::sqrt(9.81 / 0.786);
    CHECK(expected == doctest::Approx(3.533).epsilon(1e-3));
    CHECK(z.zeros[0].real() == 0.0);
    CHECK(z.zeros[1].real() == 0.0);
    CHECK(z.zeros[0].imag() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(z.zeros[1].imag() == doctest::Approx(-expected).epsilon(1e-12));
  }
  SUBCASE("below: real mirror pair, non-minimum phase") {
    const auto subs = decouple(bare_with_alpha(-0.786), w);
    const TransferZeros z = transfer_zeros(subs[0]);
    REQUIRE(z.has_finite_zeros);
    CHECK(z.non_minimum_phase);
    const double expected = std::sqrt(9.81 / 0.786);
    CHECK(z.zeros[0].imag() == 0.0);
    CHECK(z.zeros[0].real() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(z.zeros[1].real() == doctest::Approx(-expected).epsilon(1e-12));
  }
  SUBCASE("alpha zero and the integrator channels have no finite zeros") {
    const auto subs = decouple(bare_with_alpha(0.0), w);
    CHECK_FALSE(transfer_zeros(subs[0]).has_finite_zeros);
    CHECK_FALSE(transfer_zeros(subs[2]).has_finite_zeros);
    CHECK_FALSE(transfer_zeros(subs[3]).has_finite_zeros);
  }
}

TEST_CASE("transmission-zero oracle confirms the closed form") {
  CostWeights w;
  for (double alpha : {-2.3, -0.786, -0.1, 0.3, 0.786, 4.2}) {
    const auto subs = decouple(bare_with_alpha(alpha), w);
    const TransferZeros closed = transfer_zeros(subs[0]);
    REQUIRE(closed.has_finite_zeros);

    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(4);
    c(0) = 1.0;
    const auto numeric =
        paylift::testing::transmission_zeros(subs[0].a_i, subs[0].b_i, c);
    REQUIRE(numeric.size() == 2);
    for (const auto& zc : closed.zeros) {
      double best = 1e9;
      for (const auto& zn : numeric) best = std::min(best, std::abs(zn - zc));
      CHECK(best < 1e-9 * (1.0 + std::abs(zc)));
    }
  }
}

TEST_CASE("right-half-plane zeros coincide with unstable zero dynamics") {
  // Both sides computed numerically: QZ transmission zeros of the lateral
  // channel against the eigendecomposition of the zero-dynamics Jacobian.
  CostWeights w;
  const auto poi_at_payload = [](double alpha) {
    VehicleParams p = reference_params();
    const double z = alpha * 28.0 / 22.0;
    p.r_pl = Vec3(0.0, 0.0, z);
    p.r_poi = Vec3(0.0, 0.0, z);
    return p;
  };

  for (double alpha : {-0.4, -0.786, -2.5}) {
    for (const VehicleParams& p :
         {bare_with_alpha(alpha), poi_at_payload(alpha)}) {
      const auto subs = decouple(p, w);
      Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(4);
      c(0) = 1.0;
      const auto zeros =
          paylift::testing::transmission_zeros(subs[0].a_i, subs[0].b_i, c);

      std::vector<double> rhp_zeros;
      for (const auto& z : zeros) {
        if (z.real() > 1e-9) rhp_zeros.push_back(z.real());
      }
      REQUIRE(rhp_zeros.size() == 1);

      const ZeroDynJacobian jac = zero_dynamics_jacobian(p);
      Eigen::EigenSolver<Eigen::MatrixXd> eig(jac.matrix);
      std::vector<double> rhp_poles;
      for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const std::complex<double> lambda = eig.eigenvalues()(i);
        if (lambda.real() > 1e-6) {
          CHECK(std::abs(lambda.imag()) < 1e-9);
          rhp_poles.push_back(lambda.real());
        }
      }
      REQUIRE(rhp_poles.size() == 2);  // doubled root of the lateral pair
      for (double pole : rhp_poles) {
        CHECK(pole == doctest::Approx(rhp_zeros[0]).epsilon(1e-9));
      }
    }
  }
}
