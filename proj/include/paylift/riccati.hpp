#pragma once

#include <array>

#include "paylift/linearization.hpp"

namespace paylift {

/// Optimal cost matrix of one decoupled channel: the unique positive
/// definite solution of
///   A_iᵀP + P A_i - P B_i B_iᵀ P + diag(q_hat², 0, ...) = 0.
struct RiccatiBlock {
  Eigen::MatrixXd p;
};

/// Closed-form ARE solution for a channel, evaluated in extended
/// precision with cancellation-stable intermediates. Channel 2 is the
/// sign-conjugate T P1 T with T = diag(1, 1, -1, -1); the vertical and
/// yaw channels are the 2x2 double-integrator solution.
RiccatiBlock closed_form_riccati(const LinearSubsystem& subsystem,
                                 double q_hat);

/// Frobenius norm of the ARE residual of p for the subsystem's problem
/// with output weight q_hat² on the leading coordinate and unit input
/// weight. Scale against q_hat² when judging it.
double are_residual(const LinearSubsystem& subsystem, double q_hat,
                    const Eigen::MatrixXd& p);

/// Input-vector row driven by each decoupled channel: channel 1 steers
/// through the pitch torque (row 2), channel 2 through the roll torque
/// (row 1), channel 3 through the thrust (row 0), channel 4 through the
/// yaw torque (row 3).
inline constexpr std::array<int, 4> kChannelInputRow = {2, 1, 0, 3};

/// Stacked feedback gain K for the scaled input: F_hat = -K x_bar with
/// x_bar in the decoupled ordering [x1 x2 x3 x4]. Row order follows the
/// input vector (thrust, roll, pitch, yaw), so the pitch torque row
/// carries B_1ᵀP_1 against channel 1 and so on. Raw inputs are recovered
/// through the inverse input scaling.
Eigen::Matrix<double, 4, 12> lqr_gain(
    const std::array<RiccatiBlock, 4>& blocks,
    const std::array<LinearSubsystem, 4>& subsystems);

/// Channel-1-shaped lateral subsystem for a bare (alpha, q_hat) pair;
/// used by analysis sweeps that never touch vehicle parameters.
LinearSubsystem lateral_subsystem(double alpha, double q_hat, double g);

/// Double-integrator subsystem (index 3 or 4) for a bare q_hat.
LinearSubsystem integrator_subsystem(int index, double q_hat);

/// Noise gain trace(B_iᵀ P_i B_i) of a lateral channel in closed form:
///   (2a - b + sigma) / (q_hat^{3/2} sqrt(a - b + sigma)),
///   a = sqrt(2 g q_hat⁷), b = alpha q_hat⁴, sigma = sqrt((a-b)² + a²),
/// evaluated through equivalent products that avoid the cancellations at
/// |b| >> a. The channel's H2 norm is the square root of this value.
double lateral_h2_squared(double alpha, double q_hat, double g);

/// sqrt(lateral_h2_squared): the actual H2 norm of a lateral channel.
double lateral_h2(double alpha, double q_hat, double g);

/// The H2 value of a channel together with the printed-form diagnostics
/// around it. trace_gain is trace(BᵀPB), which the closed-form gain
/// expression above evaluates; the H2 norm is its square root. The
/// raw-weight variant keeps the same numerator over q_raw^{3/2} so the
/// normalization mismatch stays observable instead of silently chosen.
struct H2Forms {
  double value = 0.0;        // sqrt(trace(BᵀPB))
  double trace_gain = 0.0;   // trace(BᵀPB)
  double raw_q_variant = 0.0;  // diagnostic, never used in decisions
};

H2Forms analytical_h2_forms(const LinearSubsystem& subsystem, double q_hat,
                            double q_raw);

/// H2 norm of a channel: sqrt(trace(BᵀPB)) via the closed forms.
/// Lateral channels use lateral_h2; the double integrators have
/// trace(BᵀPB) = sqrt(2 q_hat), so their norm is (2 q_hat)^{1/4}.
double analytical_h2(const LinearSubsystem& subsystem, double q_hat);

/// Difference H2(-|alpha|) - H2(+|alpha|) for a lateral channel:
/// positive for every alpha_magnitude > 0, zero at zero. Placing the
/// controlled point above the center of gravity always rejects input
/// noise better than the mirrored placement below it.
double above_below_gap(double q_hat, double alpha_magnitude, double g = 9.81);

/// Placement analysis at the current parameters.
struct H2Report {
  std::array<double, 4> channel_h2{};  // H2 per channel at this placement
  double optimal_alpha = 0.0;  // argmin of H2 over alpha: sqrt(2g/q_hat_1)
  double optimal_alpha_searched = 0.0;  // golden-section cross-check
  double optimal_z_poi = 0.0;  // global optimum over (z_pl, z_poi)
  double optimal_z_pl = 0.0;   // 0: the payload weight enters quadratically
  double optimal_z_poi_at_current_z_pl = 0.0;  // payload pinned where it is
  double above_below_gap = 0.0;  // at the current |alpha|
};

/// Evaluates the optimal vertical placements under the decoupling
/// assumptions. optimal_alpha is taken at the channel-1 weight and the
/// current payload position; the golden-section search over the
/// analytical H2 must land within 1e-6 of the closed form and both
/// values are reported.
H2Report optimal_placement(const VehicleParams& params,
                           const CostWeights& weights);

}  // namespace paylift
