#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fvselect/diffusion_kernel.hpp"
#include "fvselect/sampler.hpp"

// Independent killed particles conditioned on survival: the flows theta_t
// (conditioning on survival up to a fixed time) and vartheta_y (running until
// the accumulated -ln survival passes y).

namespace fvselect {

/// Survivors of a conditioned run.
struct ConditionedEnsemble {
  std::vector<double> particles;
  double log_survival = 0.0;  ///< -ln(survivors / initial_count)
  double time = 0.0;
  std::size_t initial_count = 0;
  bool low_survivor_warning = false;
};

/// Every particle was killed before the requested time.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const std::string& what, double extinction_time)
      : std::runtime_error(what), extinction_time_(extinction_time) {}
  double extinction_time() const { return extinction_time_; }

 private:
  double extinction_time_;
};

/// Below this many survivors distance estimates are mostly noise.
inline constexpr std::size_t kMinSurvivors = 100;

struct KilledRunOptions {
  std::size_t chunk_size = std::size_t{1} << 16;  ///< particles per stream
  std::size_t workers = 0;                        ///< 0: default_worker_count()
  BridgeCorrection bridge = BridgeCorrection::on;
};

/// theta_t at several increasing times from one set of n particles.
/// The stream `rng` supplies one root seed; particle chunks derive their own
/// streams from it, so results do not depend on the worker count.
std::vector<ConditionedEnsemble> flow_theta_path(
    const Sampler& mu, std::span<const double> times, std::size_t n, double dt,
    Rng& rng, const KilledRunOptions& opts = {});

ConditionedEnsemble flow_theta(const Sampler& mu, double t, std::size_t n,
                               double dt, Rng& rng,
                               const KilledRunOptions& opts = {});

struct VarthetaResult {
  ConditionedEnsemble ensemble;
  double stopping_time = 0.0;  ///< estimate of T_y(mu)
};

/// Runs until -ln(survival fraction) first exceeds y.
VarthetaResult flow_vartheta(const Sampler& mu, double y, std::size_t n,
                             double dt, Rng& rng,
                             const KilledRunOptions& opts = {});

/// (t, -ln S(t) / t) on an increasing grid of strictly positive times.
std::vector<std::pair<double, double>> survival_rate_estimate(
    const Sampler& mu, std::span<const double> t_grid, std::size_t n, double dt,
    Rng& rng, const KilledRunOptions& opts = {});

/// i.i.d. draws from the survivors of an ensemble.
Sampler ensemble_sampler(const ConditionedEnsemble& e);

}  // namespace fvselect
