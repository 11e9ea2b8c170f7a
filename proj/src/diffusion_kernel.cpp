#include "fvselect/diffusion_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace fvselect {

StepOutcome step_with_absorption(double x, double dt, Rng& rng,
                                 BridgeCorrection bridge) {
  if (!(x > 0.0)) throw std::domain_error("step_with_absorption: x must be > 0");
  if (!(dt > 0.0)) throw std::domain_error("step_with_absorption: dt must be > 0");
  const double proposal = x - dt + std::sqrt(dt) * rng.normal();
  if (proposal <= 0.0) return {StepStatus::killed, 0.0};
  if (bridge == BridgeCorrection::on) {
    const double p = bridge_hit_probability(x, proposal, dt);
    if (p > 0.0 && rng.uniform() < p) return {StepStatus::killed, 0.0};
  }
  return {StepStatus::alive, proposal};
}

double sample_hitting_time(double x, Rng& rng) {
  if (!(x > 0.0)) throw std::domain_error("sample_hitting_time: x must be > 0");
  const double mu = x;
  const double shape = x * x;
  const double v = rng.normal();
  // Smaller root of the quadratic, written without cancellation:
  // mu (1 + a - sqrt(a^2 + 2a)) = mu / (1 + a + sqrt(a^2 + 2a)).
  const double a = mu * v * v / (2.0 * shape);
  const double candidate = mu / (1.0 + a + std::sqrt(a * a + 2.0 * a));
  if (rng.uniform() * (mu + candidate) <= mu) return candidate;
  return mu * mu / candidate;
}

}  // namespace fvselect
