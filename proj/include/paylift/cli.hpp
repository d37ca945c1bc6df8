#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "paylift/sim.hpp"

namespace paylift {

/// Malformed run-configuration text or an invalid field value. what()
/// names the offending section and key.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Inclusive uniform grid over [min, max] with `count` points. A single
/// point (count == 1) requires min == max so the written form is
/// unambiguous.
struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  std::vector<double>  points() const;
  /// Spacing between adjacent points; 0 for a single-point grid.
  double step() const;
  /// Throws config_error naming `name` unless the grid is finite,
  /// nonempty, and ordered.
  void validate(const std::string& name) const;
};

/// Trajectory-run request: the shared initial state, which models to run,
/// and an optional mirrored placement pair. With alpha_magnitude == 0 the
/// configured vehicle placement is used as is; with a positive magnitude
/// the point of interest is moved to effective offsets +magnitude and
/// -magnitude above/below the combined center of gravity and both
/// placements are run.
struct ScenarioSpec {
  RigidState initial;
  double alpha_magnitude = 0.0;
  bool run_nonlinear = true;
  bool run_linearized = false;
};

/// Grids of the placement sweep: payload height, point-of-interest
/// height, and the effective-offset axis of the mirror-gap table.
struct SweepSpec {
  GridSpec z_pl{0.0, 0.0, 1};
  GridSpec z_poi{0.0, 0.0, 1};
  GridSpec alpha{0.0, 0.0, 1};
};

/// Complete description of a tool run, one-to-one with the configuration
/// file: sections [vehicle], [weights], [sim], [scenario], [sweep],
/// [output].
struct RunConfig {
  VehicleParams vehicle;
  CostWeights weights;
  SimConfig sim;
  ScenarioSpec scenario;
  SweepSpec sweep;
  std::string out_dir = "out";

  /// Field-level validation of every section; throws config_error with
  /// the section.key path in the message.
  void validate() const;
};

/// Parses the key-value configuration format. Unknown sections or keys
/// are errors; omitted keys keep their defaults. Throws config_error.
RunConfig parse_run_config(std::istream& in);

/// Reads and parses a configuration file; file-system failures and parse
/// failures both surface as config_error.
RunConfig load_run_config(const std::string& path);

/// Canonical serialization: every key written, full double precision.
/// parse(serialize(c)) reproduces c exactly.
void write_run_config(std::ostream& out, const RunConfig& config);
std::string serialize_run_config(const RunConfig& config);

/// FNV-1a 64 over the canonical serialization with the output directory
/// normalized away: the hash fingerprints the run content, not its
/// destination. Identical setups hash identically across runs and
/// machines.
std::uint64_t config_hash(const RunConfig& config);

/// Version string baked into the binary; printed in every output header.
const char* tool_version();

/// Command-line overrides applied on top of the configuration file.
struct CliOptions {
  std::string out_dir;  // empty: use the configured directory
  bool has_seed = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool corrupt_riccati = false;  // self-test hook: break one Riccati entry
};

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Writes <out>/analysis.txt: effective offset, internal-dynamics
/// classification and eigenvalues, per-channel weights and noise gains,
/// optimal placements, and per-channel transfer-zero classification.
int cmd_analyze(const RunConfig& config, const CliOptions& options);

/// Runs the scenario for every requested (model, placement) pair. Writes
/// one trajectory CSV per run plus summary.txt with final errors, final
/// costs, and abort flags. Aborted or diverged runs keep their partial
/// CSV and turn the exit code into a check failure.
int cmd_simulate(const RunConfig& config, const CliOptions& options);

/// Writes placement_surface.csv (z_pl, z_poi, alpha, h2 over the grid
/// product), offset_gaps.csv (h2 at +alpha and -alpha over the offset
/// grid), and sweep_summary.txt locating the surface argmin against the
/// closed-form optimum. A surface argmin farther than one grid step from
/// an in-window optimum is a check failure.
int cmd_sweep(const RunConfig& config, const CliOptions& options);

/// Runs the built-in consistency suite (Riccati residuals, noise-gain
/// trace agreement, linearization cross-check, transfer zeros, Monte
/// Carlo noise gain, mirrored-placement cost gaps, placement optimum
/// search) and writes validation.txt as a pass/fail table with measured
/// values. Any failing row turns into exit code 1. Requires a positive
/// noise intensity for the Monte Carlo row; refuses otherwise.
int cmd_validate(const RunConfig& config, const CliOptions& options);

/// Dispatches one subcommand by name and maps exceptions onto exit codes:
/// configuration problems (config_error, invalid arguments, violated
/// model assumptions) give 2, runtime check failures give 1. Unknown
/// command names are configuration errors. Used by the binary and by
/// tests so both exercise identical behavior.
int run_command(const std::string& command, const RunConfig& config,
                const CliOptions& options);

}  // namespace paylift
