#include "fvselect/killed_process.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include "fvselect/parallel.hpp"

namespace fvselect {

namespace {

constexpr std::uint64_t kThetaTag = tag_hash("killed_process/theta");
constexpr std::uint64_t kVarthetaTag = tag_hash("killed_process/vartheta");

void check_common(std::size_t n, double dt) {
  if (n < 1000) throw std::invalid_argument("killed process: n must be >= 1000");
  if (!(dt > 0.0)) throw std::domain_error("killed process: dt must be > 0");
}

std::size_t chunk_count(std::size_t n, std::size_t chunk) {
  return (n + chunk - 1) / chunk;
}

std::vector<double> draw_initial(const Sampler& mu, std::size_t count, Rng& rng) {
  std::vector<double> xs(count);
  for (auto& x : xs) {
    x = mu(rng);
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::domain_error("initial law must be supported on (0, inf)");
    }
  }
  return xs;
}

struct Segment {
  std::size_t steps;
  double h;
};

std::vector<Segment> segments_for(std::span<const double> times, double dt) {
  std::vector<Segment> segs;
  double prev = 0.0;
  for (double t : times) {
    if (t < prev) throw std::invalid_argument("times must be non-decreasing");
    const double span = t - prev;
    const auto steps =
        span == 0.0 ? std::size_t{0}
                    : static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    segs.push_back({steps, steps == 0 ? 0.0 : span / static_cast<double>(steps)});
    prev = t;
  }
  return segs;
}

ConditionedEnsemble finish(std::vector<double> survivors, std::size_t n,
                           double time, double extinction_time) {
  if (survivors.empty()) {
    throw DegeneracyError("all " + std::to_string(n) +
                              " particles killed; extinction at t = " +
                              std::to_string(extinction_time),
                          extinction_time);
  }
  ConditionedEnsemble e;
  e.initial_count = n;
  e.time = time;
  e.log_survival = -std::log(static_cast<double>(survivors.size()) /
                             static_cast<double>(n));
  e.low_survivor_warning = survivors.size() < kMinSurvivors;
  if (e.low_survivor_warning) {
    std::cerr << "warning: only " << survivors.size()
              << " survivors at t = " << time << "; ensemble is degenerate\n";
  }
  e.particles = std::move(survivors);
  return e;
}

}  // namespace

std::vector<ConditionedEnsemble> flow_theta_path(const Sampler& mu,
                                                 std::span<const double> times,
                                                 std::size_t n, double dt,
                                                 Rng& rng,
                                                 const KilledRunOptions& opts) {
  check_common(n, dt);
  if (times.empty()) throw std::invalid_argument("flow_theta: no times given");
  if (times.front() < 0.0) throw std::domain_error("flow_theta: t must be >= 0");
  const auto segs = segments_for(times, dt);
  const std::uint64_t root = rng();
  const std::size_t n_chunks = chunk_count(n, opts.chunk_size);

  struct ChunkResult {
    std::vector<std::vector<double>> survivors;
    double last_death = 0.0;
  };
  std::vector<ChunkResult> results(n_chunks);

  parallel_for(
      n_chunks,
      [&](std::size_t c) {
        Rng local(derive_seed(root, kThetaTag, 0, c));
        const std::size_t begin = c * opts.chunk_size;
        const std::size_t count = std::min(opts.chunk_size, n - begin);
        auto xs = draw_initial(mu, count, local);
        auto& out = results[c];
        out.survivors.resize(segs.size());
        for (double x : xs) {
          double t = 0.0;
          bool alive = true;
          for (std::size_t k = 0; k < segs.size() && alive; ++k) {
            for (std::size_t s = 0; s < segs[k].steps; ++s) {
              const auto o = step_with_absorption(x, segs[k].h, local, opts.bridge);
              t += segs[k].h;
              if (!o.alive()) {
                alive = false;
                out.last_death = std::max(out.last_death, t);
                break;
              }
              x = o.position;
            }
            if (alive) out.survivors[k].push_back(x);
          }
        }
      },
      opts.workers);

  double extinction = 0.0;
  for (const auto& r : results) extinction = std::max(extinction, r.last_death);
  std::vector<ConditionedEnsemble> path;
  path.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> merged;
    for (auto& r : results) {
      merged.insert(merged.end(), r.survivors[k].begin(), r.survivors[k].end());
      r.survivors[k].clear();
      r.survivors[k].shrink_to_fit();
    }
    path.push_back(finish(std::move(merged), n, times[k], extinction));
  }
  return path;
}

ConditionedEnsemble flow_theta(const Sampler& mu, double t, std::size_t n,
                               double dt, Rng& rng,
                               const KilledRunOptions& opts) {
  const double times[] = {t};
  return std::move(flow_theta_path(mu, times, n, dt, rng, opts).front());
}

VarthetaResult flow_vartheta(const Sampler& mu, double y, std::size_t n,
                             double dt, Rng& rng, const KilledRunOptions& opts) {
  check_common(n, dt);
  if (y < 0.0) throw std::domain_error("flow_vartheta: y must be >= 0");
  const std::uint64_t root = rng();
  const std::size_t n_chunks = chunk_count(n, opts.chunk_size);

  struct ChunkState {
    Rng rng;
    std::vector<double> alive;
  };
  std::vector<ChunkState> chunks(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    chunks[c].rng.reseed(derive_seed(root, kVarthetaTag, 0, c));
    const std::size_t count = std::min(opts.chunk_size, n - c * opts.chunk_size);
    chunks[c].alive = draw_initial(mu, count, chunks[c].rng);
  }

  auto gather = [&] {
    std::vector<double> all;
    all.reserve(n);
    for (const auto& c : chunks) all.insert(all.end(), c.alive.begin(), c.alive.end());
    return all;
  };
  if (y == 0.0) return {finish(gather(), n, 0.0, 0.0), 0.0};

  // Advance one chunk by `steps` steps, recording the alive count after each.
  auto advance = [&](ChunkState& c, std::size_t steps, std::vector<std::size_t>* counts) {
    for (std::size_t s = 0; s < steps; ++s) {
      std::size_t kept = 0;
      for (double x : c.alive) {
        const auto o = step_with_absorption(x, dt, c.rng, opts.bridge);
        if (o.alive()) c.alive[kept++] = o.position;
      }
      c.alive.resize(kept);
      if (counts) (*counts)[s] = kept;
    }
  };

  constexpr std::size_t kBlock = 1000;
  const double threshold = std::exp(-y) * static_cast<double>(n);
  std::size_t steps_done = 0;
  for (;;) {
    const auto saved = chunks;
    std::vector<std::vector<std::size_t>> counts(n_chunks,
                                                 std::vector<std::size_t>(kBlock));
    parallel_for(
        n_chunks, [&](std::size_t c) { advance(chunks[c], kBlock, &counts[c]); },
        opts.workers);
    for (std::size_t s = 0; s < kBlock; ++s) {
      std::size_t total = 0;
      for (const auto& cc : counts) total += cc[s];
      // -ln(total / n) > y  <=>  total < n e^{-y}
      if (static_cast<double>(total) < threshold) {
        chunks = saved;
        parallel_for(
            n_chunks, [&](std::size_t c) { advance(chunks[c], s + 1, nullptr); },
            opts.workers);
        const double stop = static_cast<double>(steps_done + s + 1) * dt;
        return {finish(gather(), n, stop, stop), stop};
      }
    }
    steps_done += kBlock;
  }
}

std::vector<std::pair<double, double>> survival_rate_estimate(
    const Sampler& mu, std::span<const double> t_grid, std::size_t n, double dt,
    Rng& rng, const KilledRunOptions& opts) {
  if (t_grid.empty()) throw std::invalid_argument("survival_rate: empty grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) {
      throw std::domain_error("survival_rate: rate undefined at t <= 0");
    }
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) {
      throw std::invalid_argument("survival_rate: grid must be increasing");
    }
  }
  const auto path = flow_theta_path(mu, t_grid, n, dt, rng, opts);
  std::vector<std::pair<double, double>> out;
  out.reserve(path.size());
  for (const auto& e : path) out.emplace_back(e.time, e.log_survival / e.time);
  return out;
}

Sampler ensemble_sampler(const ConditionedEnsemble& e) {
  return list_sampler(e.particles);
}

}  // namespace fvselect
