#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fvselect/qsd_analytics.hpp"
#include "fvselect/random.hpp"

namespace fvselect {

/// Draws one initial position. Samplers must be safe to call concurrently
/// with distinct streams.
using Sampler = std::function<double(Rng&)>;

inline Sampler point_sampler(double x) {
  if (!(x > 0.0)) throw std::domain_error("point_sampler: x must be > 0");
  return [x](Rng&) { return x; };
}

inline Sampler qsd_sampler(const QsdParams& q) {
  return [q](Rng& rng) { return qsd_draw(q, rng); };
}

/// Uniform draws from a fixed list of positions.
inline Sampler list_sampler(std::vector<double> points) {
  if (points.empty()) throw std::invalid_argument("list_sampler: empty list");
  auto shared = std::make_shared<const std::vector<double>>(std::move(points));
  return [shared](Rng& rng) { return (*shared)[rng.below(shared->size())]; };
}

}  // namespace fvselect
