#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fvselect/measures_stats.hpp"
#include "fvselect/random.hpp"

// N-branching Brownian motion: N standard Brownian particles on the line,
// each branching at rate 1; every branching removes the lowest particle.

namespace fvselect {

/// Minimal wave speed sqrt(2).
inline const double kMinWaveSpeed = std::sqrt(2.0);

struct NbbmState {
  std::vector<double> positions;
  double time = 0.0;
  std::uint64_t branch_count = 0;
  Rng rng;

  std::size_t size() const { return positions.size(); }
  double min() const;
  double median() const;
};

/// All particles start at the origin unless positions are given.
NbbmState nbbm_init(std::size_t n, std::uint64_t seed,
                    std::vector<double> positions = {});

/// Gaussian increments of variance dt, then per-particle branching with
/// probability 1 - e^{-dt}, applied in random order. A branch copies the
/// brancher over the current minimum. Requires dt <= 0.01.
void nbbm_step(NbbmState& state, double dt);

struct FrontTrajectory {
  std::vector<double> times;
  std::vector<double> min;
  std::vector<double> median;
};

/// Runs round(horizon / dt) steps, recording the front every `record_every`
/// steps. `on_record` (optional) sees the state at each record.
FrontTrajectory nbbm_run(NbbmState& state, double horizon, double dt,
                         std::size_t record_every,
                         const std::function<void(const NbbmState&)>& on_record = {});

/// Least-squares slope over the trailing `fit_window` samples. The standard
/// error comes from 20 contiguous sub-window displacement rates.
EstimatorResult front_speed(std::span<const double> times,
                            std::span<const double> front,
                            std::size_t fit_window);

/// w_c(x) = c pi_{1/c^2}(c x); for c = sqrt(2) this is 2 x e^{-sqrt(2) x}.
std::function<double(double)> wave_profile(double c);
AnalyticLaw wave_law(double c);

/// Positions seen from the current minimum.
EmpiricalMeasure centered_profile(const NbbmState& state);

}  // namespace fvselect
