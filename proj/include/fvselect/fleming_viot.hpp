#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fvselect/diffusion_kernel.hpp"
#include "fvselect/measures_stats.hpp"
#include "fvselect/sampler.hpp"

// N-particle Fleming-Viot system for Brownian motion with drift -1 killed at
// 0: a killed particle instantly jumps onto the position of another particle
// chosen uniformly at random.

namespace fvselect {

/// Smallest N for which the stationary jump rate is known to be finite.
inline constexpr std::size_t kFiniteRateMinN = 12;

/// Every particle died within one step; the continuous system never does this.
class MassExtinctionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough post-burn-in data for the stationary estimators.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JumpEvent {
  double time = 0.0;
  std::size_t dying_index = 0;
  std::size_t target_index = 0;
  std::vector<double> positions_snapshot;  ///< empty unless requested
};

/// Positions plus the random streams that drive them.
///
/// Each particle owns a stream keyed by its stream id; resurrection choices
/// come from a separate system stream. Kill resolution only looks at stream
/// ids, never at storage order, so relabelling particles together with their
/// stream ids leaves the dynamics unchanged.
struct ParticleSystemState {
  std::vector<double> positions;
  double time = 0.0;
  std::uint64_t jumps = 0;  ///< cumulative kills; J_t = jumps / N

  std::vector<std::uint64_t> stream_ids;
  std::vector<Rng> particle_rngs;
  Rng system_rng;
  std::vector<std::size_t> rank_order;  ///< storage indices sorted by stream id

  std::size_t size() const { return positions.size(); }
  double jump_count_normalised() const {
    return static_cast<double>(jumps) / static_cast<double>(size());
  }
};

/// A resurrection as written to the event log: particles named by stream id.
struct LoggedJump {
  double time = 0.0;
  std::uint64_t dying_stream = 0;
  std::uint64_t target_stream = 0;
  double position = 0.0;  ///< landing position
};

using InitialCondition = std::variant<Sampler, std::vector<double>>;

/// State at time 0. `seed` roots every stream of the system; `stream_ids`
/// defaults to 0..N-1. Throws std::invalid_argument for N < 2 and
/// std::domain_error for non-positive initial positions.
ParticleSystemState fv_init(std::size_t n_particles,
                            const InitialCondition& initial, std::uint64_t seed,
                            std::vector<std::uint64_t> stream_ids = {});

struct FvStepOptions {
  BridgeCorrection bridge = BridgeCorrection::on;
  bool snapshot_events = false;
};

/// Advances every particle by one kernel step, then resurrects the killed
/// ones in uniformly random order, each onto a uniformly chosen other particle
/// that currently has a position. Events are stamped with the step end time.
std::vector<JumpEvent> fv_step(ParticleSystemState& state, double dt,
                               const FvStepOptions& opts = {});

struct FvObservers {
  /// Called after every step with that step's events.
  std::function<void(const ParticleSystemState&, std::span<const JumpEvent>)>
      on_step;
  /// Called every `snapshot_every` steps (0 disables).
  std::size_t snapshot_every = 0;
  std::function<void(const ParticleSystemState&)> on_snapshot;
};

/// Steps for round(horizon / dt) steps. A zero horizon is a no-op.
void fv_run(ParticleSystemState& state, double horizon, double dt,
            const FvObservers& observers, const FvStepOptions& opts = {});

struct StationaryConfig {
  std::size_t n_particles = 100;
  double dt = 1e-3;
  double horizon = 500.0;
  /// Negative: default of max(10% of horizon, 20).
  double burn_in = -1.0;
  InitialCondition initial = Sampler{};
  std::uint64_t seed = 1;
  /// Width of the recording intervals; xi is sampled once per interval.
  double record_interval = 0.1;
  std::size_t n_batches = 30;
  std::vector<std::uint64_t> stream_ids;
  BridgeCorrection bridge = BridgeCorrection::on;
  /// Keep the first this-many post-burn-in events in the trace (0: none).
  std::size_t event_log_limit = 0;
};

double resolved_burn_in(const StationaryConfig& c);

/// Raw per-interval records behind the stationary summaries. Positions are
/// stored in stream-id order.
struct StationaryTrace {
  std::size_t n_particles = 0;
  double interval = 0.0;
  std::vector<std::uint64_t> jumps;      ///< kills per interval
  std::vector<double> xi_points;         ///< one N-block per interval
  std::vector<double> varpi_points;      ///< one N-block per jump event
  std::vector<std::size_t> events;       ///< jump events per interval
  std::vector<double> interjump;         ///< gaps between post-burn-in events
  std::vector<LoggedJump> event_log;     ///< see StationaryConfig::event_log_limit
  std::size_t n_batches = 30;
};

struct StationarySummary {
  EstimatorResult lambda_hat;
  EmpiricalMeasure xi_hat;
  EmpiricalMeasure varpi_hat;
  EstimatorResult mean_interjump;
  double burn_in_used = 0.0;
  std::size_t n_particles = 0;
  /// False for N < 12, where finiteness of the rate is not established.
  bool finite_rate_guaranteed = true;
  StationaryTrace trace;
};

/// Time-averaged stationary estimates after burn-in. Throws
/// InsufficientDataError with fewer than 20 batches or 1000 jump events.
StationarySummary estimate_stationary(const StationaryConfig& config);

/// Per-interval series of f averaged over the xi snapshot.
std::vector<double> time_average_series(const StationarySummary& s,
                                        const std::function<double(double)>& f);
/// Per-interval series of (1 / (N dt_interval)) sum over events of the mean of
/// g over the post-jump configuration; its mean estimates lambda_N varpi(g).
std::vector<double> jump_weighted_series(const StationarySummary& s,
                                         std::span<const double> g_of_varpi);

/// lambda_hat * N * mean_interjump, which should be 1.
EstimatorResult interjump_identity(const StationarySummary& s);
/// lambda_hat * varpi_hat(G1), which should equal xi(1) = 1.
EstimatorResult g1_identity(const StationarySummary& s);
/// lambda_hat over the two halves of the measurement window.
std::pair<EstimatorResult, EstimatorResult> split_half_lambda(
    const StationarySummary& s);

struct GreenCheck {
  double lhs = 0.0;      ///< xi_hat(f)
  double rhs = 0.0;      ///< lambda_hat * varpi_hat(Gf)
  double z_score = 0.0;  ///< batch-means z of the per-interval difference
  double std_error = 0.0;
};

/// Checks xi = lambda varpi G on a test function f.
GreenCheck green_identity_check(const StationarySummary& s,
                                const std::function<double(double)>& f);

/// iota_N = -N ln(1 - 1/N).
double iota(std::size_t n);
/// Lower bound lambda_min / iota_N on the stationary jump rate.
double lambda_lower_bound(std::size_t n);

}  // namespace fvselect
