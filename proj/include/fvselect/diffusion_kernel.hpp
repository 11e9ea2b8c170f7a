#pragma once

#include <cmath>

#include "fvselect/random.hpp"

namespace fvselect {

enum class StepStatus { alive, killed };

struct StepOutcome {
  StepStatus status = StepStatus::alive;
  double position = 0.0;  ///< meaningful only when alive

  bool alive() const { return status == StepStatus::alive; }
};

/// Whether the Brownian-bridge crossing test is applied inside a step.
/// `off` exists only to exhibit the bias the correction removes.
enum class BridgeCorrection { on, off };

/// One step of dX = -dt + dW with absorption at 0.
///
/// Proposes x' = x - dt + sqrt(dt) Z. A proposal at or below 0 is a kill;
/// otherwise the path is killed with the bridge hitting probability
/// exp(-2 x x' / dt). The bridge law does not depend on the drift.
/// Throws std::domain_error for non-positive x or dt.
StepOutcome step_with_absorption(double x, double dt, Rng& rng,
                                 BridgeCorrection bridge = BridgeCorrection::on);

/// Bridge hitting probability, exp(-2 x x' / dt), returning exactly 0 once the
/// exponent underflows.
inline double bridge_hit_probability(double x, double x_new, double dt) {
  const double e = 2.0 * x * x_new / dt;
  return e > 745.0 ? 0.0 : std::exp(-e);
}

/// Exact draw of the hitting time of 0 from x: inverse Gaussian with mean x
/// and shape x^2 (Michael-Schucany-Haas).
double sample_hitting_time(double x, Rng& rng);

}  // namespace fvselect
