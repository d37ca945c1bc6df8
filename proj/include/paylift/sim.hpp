#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "paylift/linearization.hpp"
#include "paylift/riccati.hpp"
#include "paylift/vehicle.hpp"

namespace paylift {

enum class IntegratorKind { RK4Fixed, AdaptiveRK };
enum class ModelKind { Nonlinear, Linearized };

/// Closed-loop run description. The same config and seed always produce a
/// bit-identical run; noise-free runs do not consume the seed at all.
struct SimConfig {
  double dt = 1e-3;           // fixed step, and initial step for AdaptiveRK
  double horizon = 10.0;      // seconds
  IntegratorKind integrator = IntegratorKind::RK4Fixed;
  double noise_sigma = 0.0;   // white-noise intensity on the raw inputs
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::Nonlinear;

  /// Throws std::invalid_argument unless dt > 0, horizon >= dt, and
  /// noise_sigma >= 0. Noise requires RK4Fixed: adapting the step to a
  /// step-dependent disturbance would change its spectrum.
  void validate() const;
};

/// Sampled closed-loop run. All vectors have equal length; entry k belongs
/// to times[k]. inputs[k] is the raw wrench applied from times[k] on (for
/// the final sample: the commanded wrench at that state, without a noise
/// draw). cumulative_cost integrates squared weighted output error plus
/// squared normalized input with the same quadrature as the state; this is
/// the objective the feedback law minimizes, the quantity that reaches
/// x0' P x0 on the linearized loop, and it is nondecreasing.
/// cumulative_cost_raw is the same integral with the raw thrust/torque
/// deviation in place of the normalized input; it is a diagnostic only
/// and orders placements differently.
struct Trajectory {
  std::vector<double> times;
  std::vector<RigidState> states;
  std::vector<ControlInput> inputs;
  std::vector<double> cumulative_cost;
  std::vector<double> cumulative_cost_raw;
  bool aborted_attitude = false;  // stopped at the pitch singularity guard
  bool diverged = false;          // stopped when the state norm passed 1e6
};

/// Monte Carlo gain estimate. value approximates the steady-state ratio
/// sqrt(E||z||^2 / sigma_w^2) for the channel's weighted output z;
/// standard_error is the across-seed standard error propagated to value.
struct H2Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::int64_t n_steps = 0;  // steady-state samples summed over runs
  std::int64_t n_runs = 0;
};

/// Deviation between the nonlinear and linearized closed loops started
/// from one initial pitch angle. error[k] is the state-vector distance at
/// times[k]; peak_error is its maximum over the run.
struct ModelErrorCurve {
  double initial_angle = 0.0;
  std::vector<double> times;
  std::vector<double> error;
  double peak_error = 0.0;
};

/// Regulation costs (final cumulative_cost) of one initial condition under
/// the two mirror-image placements. gap = cost_below - cost_above; clean
/// is false when either run stopped early (abort or divergence), which
/// voids the comparison.
struct CostGap {
  double cost_below = 0.0;
  double cost_above = 0.0;
  double gap = 0.0;
  bool clean = true;
};

/// State matrix of the linearized optimal loop in the RigidState vector
/// layout: a - b psi^{-1} K Pi with Pi the decoupled reordering. Its
/// spectrum gives the closed-loop poles; every eigenvalue has negative
/// real part.
Mat12 closed_loop_state_matrix(const VehicleParams& params,
                               const CostWeights& weights);

/// Slowest decay rate min_i(-Re lambda_i) over the spectrum of a square
/// matrix; positive exactly when the matrix is Hurwitz. Settling and
/// burn-in horizons scale with its reciprocal.
double slowest_decay_rate(const Eigen::Ref<const Eigen::MatrixXd>& a);

/// Zero-order-hold white noise: independent N(0, sigma^2/dt) samples held
/// constant over one step, so the piecewise-constant signal approximates
/// continuous white noise of intensity sigma. Deterministic per seed.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, double sigma, double dt);
  double next();
  Vec4 next_vec4();

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_;
  bool silent_ = false;  // sigma == 0 yields zeros without touching rng_
};

/// Decorrelated child seed for stream `stream` of a master seed; used to
/// fan independent Monte Carlo runs out of one config seed.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Closed-loop regulation to hover from `initial`. The loop applies the
/// equilibrium wrench plus the optimal normalized feedback mapped back to
/// raw inputs, plus (RK4Fixed only) zero-order-hold input noise. Feedback
/// is evaluated continuously inside integrator stages; noise is held over
/// each step. Requires the decoupling assumptions, a finite initial state,
/// and |initial pitch| < pi/2. Runs that hit the pitch-singularity guard
/// or a state norm above 1e6 return the partial trajectory with the
/// matching flag set instead of throwing.
Trajectory simulate(const VehicleParams& params, const CostWeights& weights,
                    const SimConfig& config, const RigidState& initial);

/// Runs both models from rest at each pitch angle (radians, |angle| <
/// pi/2) and returns one error curve per angle, in input order. Requires
/// noise_sigma == 0 and RK4Fixed so both models share one deterministic
/// time grid.
std::vector<ModelErrorCurve> compare_models(const VehicleParams& params,
                                            const CostWeights& weights,
                                            const SimConfig& config,
                                            const std::vector<double>& initial_angles);

/// Monte Carlo estimate of one channel's closed-loop gain from its
/// normalized input disturbance to its weighted output (channel 1..4).
/// Averages over independent seeded runs after discarding a burn-in of
/// five slowest closed-loop time constants. Requires noise_sigma > 0,
/// RK4Fixed, and a horizon long enough to leave steady-state samples
/// after burn-in. Throws std::runtime_error if a run leaves the basin
/// (divergence or attitude abort), since the average is then meaningless.
H2Estimate estimate_h2(const VehicleParams& params, const CostWeights& weights,
                       const SimConfig& config, int channel);

/// Regulation-cost table for mirror-image placements: for each initial
/// condition, runs the nonlinear loop with the point of interest moved to
/// effective offsets +alpha_magnitude (above) and -alpha_magnitude
/// (below), everything else identical, and tabulates the final costs.
/// Requires alpha_magnitude > 0 and noise_sigma == 0 (the comparison is
/// deterministic).
std::vector<CostGap> cost_comparison(const VehicleParams& params,
                                     const CostWeights& weights,
                                     const SimConfig& config,
                                     double alpha_magnitude,
                                     const std::vector<RigidState>& initial_set);

/// Writes `t`, the twelve state components, the four raw inputs, and the
/// cumulative cost as one CSV row per sample, preceded by a header row.
/// '.' decimal separator, '\n' line ends.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace paylift
