#include "fvselect/fleming_viot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fvselect/qsd_analytics.hpp"

namespace fvselect {

namespace {

constexpr std::uint64_t kParticleTag = tag_hash("fleming_viot/particle");
constexpr std::uint64_t kSystemTag = tag_hash("fleming_viot/system");

std::size_t steps_for(double horizon, double dt) {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

void append_rank_ordered(const ParticleSystemState& s, std::vector<double>& out) {
  for (std::size_t i : s.rank_order) out.push_back(s.positions[i]);
}

}  // namespace

ParticleSystemState fv_init(std::size_t n_particles,
                            const InitialCondition& initial, std::uint64_t seed,
                            std::vector<std::uint64_t> stream_ids) {
  if (n_particles < 2) {
    throw std::invalid_argument("fv_init: the system needs N >= 2 particles");
  }
  ParticleSystemState s;
  s.system_rng.reseed(derive_seed(seed, kSystemTag, 0, 0));
  if (stream_ids.empty()) {
    stream_ids.resize(n_particles);
    std::iota(stream_ids.begin(), stream_ids.end(), std::uint64_t{0});
  }
  if (stream_ids.size() != n_particles) {
    throw std::invalid_argument("fv_init: stream id count must equal N");
  }
  {
    auto sorted = stream_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("fv_init: stream ids must be distinct");
    }
  }

  if (const auto* explicit_positions = std::get_if<std::vector<double>>(&initial)) {
    if (explicit_positions->size() != n_particles) {
      throw std::invalid_argument("fv_init: expected N initial positions");
    }
    s.positions = *explicit_positions;
  } else {
    const auto& sampler = std::get<Sampler>(initial);
    if (!sampler) throw std::invalid_argument("fv_init: no initial sampler");
    s.positions.resize(n_particles);
    for (auto& x : s.positions) x = sampler(s.system_rng);
  }
  for (double x : s.positions) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::domain_error("fv_init: initial positions must be > 0");
    }
  }

  s.particle_rngs.reserve(n_particles);
  for (auto id : stream_ids) {
    s.particle_rngs.emplace_back(derive_seed(seed, kParticleTag, 0, id));
  }
  s.rank_order.resize(n_particles);
  std::iota(s.rank_order.begin(), s.rank_order.end(), std::size_t{0});
  std::sort(s.rank_order.begin(), s.rank_order.end(),
            [&](std::size_t a, std::size_t b) { return stream_ids[a] < stream_ids[b]; });
  s.stream_ids = std::move(stream_ids);
  return s;
}

std::vector<JumpEvent> fv_step(ParticleSystemState& state, double dt,
                               const FvStepOptions& opts) {
  if (!(dt > 0.0)) throw std::domain_error("fv_step: dt must be > 0");
  const std::size_t n = state.size();
  std::vector<std::size_t> dead;
  for (std::size_t i = 0; i < n; ++i) {
    const auto o = step_with_absorption(state.positions[i], dt,
                                        state.particle_rngs[i], opts.bridge);
    if (o.alive()) {
      state.positions[i] = o.position;
    } else {
      dead.push_back(i);
    }
  }
  state.time += dt;
  if (dead.empty()) return {};
  if (dead.size() == n) {
    throw MassExtinctionError(
        "mass extinction at dt resolution: all " + std::to_string(n) +
        " particles killed in one step at t = " + std::to_string(state.time) +
        "; use a smaller dt");
  }

  // Canonical order first, so the shuffle does not depend on storage layout.
  std::sort(dead.begin(), dead.end(), [&](std::size_t a, std::size_t b) {
    return state.stream_ids[a] < state.stream_ids[b];
  });
  for (std::size_t k = dead.size(); k > 1; --k) {
    std::swap(dead[k - 1], dead[state.system_rng.below(k)]);
  }

  std::vector<char> has_position(n, 1);
  for (std::size_t i : dead) has_position[i] = 0;
  std::vector<JumpEvent> events;
  events.reserve(dead.size());
  for (std::size_t k : dead) {
    std::size_t target;
    do {
      target = state.rank_order[state.system_rng.below(n)];
    } while (target == k || !has_position[target]);
    state.positions[k] = state.positions[target];
    has_position[k] = 1;
    ++state.jumps;
    events.push_back({state.time, k, target, {}});
  }
  if (opts.snapshot_events) {
    for (auto& e : events) e.positions_snapshot = state.positions;
  }
  return events;
}

void fv_run(ParticleSystemState& state, double horizon, double dt,
            const FvObservers& observers, const FvStepOptions& opts) {
  if (horizon < 0.0) throw std::domain_error("fv_run: horizon must be >= 0");
  if (!(dt > 0.0)) throw std::domain_error("fv_run: dt must be > 0");
  const std::size_t steps = steps_for(horizon, dt);
  for (std::size_t s = 1; s <= steps; ++s) {
    const auto events = fv_step(state, dt, opts);
    if (observers.on_step) observers.on_step(state, events);
    if (observers.snapshot_every != 0 && s % observers.snapshot_every == 0 &&
        observers.on_snapshot) {
      observers.on_snapshot(state);
    }
  }
}

double resolved_burn_in(const StationaryConfig& c) {
  return c.burn_in >= 0.0 ? c.burn_in : std::max(0.1 * c.horizon, 20.0);
}

StationarySummary estimate_stationary(const StationaryConfig& config) {
  const double burn_in = resolved_burn_in(config);
  if (!(config.horizon > burn_in) || burn_in < 0.0) {
    throw std::invalid_argument(
        "estimate_stationary: need horizon > burn_in >= 0");
  }
  if (!(config.record_interval > 0.0)) {
    throw std::invalid_argument("estimate_stationary: record_interval must be > 0");
  }
  const std::size_t steps_per_interval =
      std::max<std::size_t>(1, steps_for(config.record_interval, config.dt));
  const double interval = static_cast<double>(steps_per_interval) * config.dt;
  const std::size_t n_intervals = static_cast<std::size_t>(
      std::floor((config.horizon - burn_in) / interval + 1e-9));
  if (config.n_batches < 20 || n_intervals < 2 * config.n_batches) {
    throw InsufficientDataError(
        "estimate_stationary: fewer than 20 post-burn-in batches available");
  }

  auto state = fv_init(config.n_particles, config.initial, config.seed,
                       config.stream_ids);
  const FvStepOptions opts{config.bridge, false};
  fv_run(state, burn_in, config.dt, {}, opts);

  const std::size_t n = config.n_particles;
  StationaryTrace trace;
  trace.n_particles = n;
  trace.interval = interval;
  trace.n_batches = config.n_batches;
  trace.jumps.reserve(n_intervals);
  trace.events.reserve(n_intervals);
  trace.xi_points.reserve(n_intervals * n);

  std::uint64_t jumps_in_interval = 0;
  std::size_t events_in_interval = 0;
  double last_event_time = -1.0;
  FvObservers obs;
  obs.on_step = [&](const ParticleSystemState& s, std::span<const JumpEvent> ev) {
    if (ev.empty()) return;
    jumps_in_interval += ev.size();
    // Events within one step share the post-step configuration.
    for (const auto& e : ev) {
      if (last_event_time >= 0.0) trace.interjump.push_back(e.time - last_event_time);
      last_event_time = e.time;
      append_rank_ordered(s, trace.varpi_points);
      ++events_in_interval;
      if (trace.event_log.size() < config.event_log_limit) {
        trace.event_log.push_back({e.time, s.stream_ids[e.dying_index],
                                   s.stream_ids[e.target_index],
                                   s.positions[e.dying_index]});
      }
    }
  };
  obs.snapshot_every = steps_per_interval;
  obs.on_snapshot = [&](const ParticleSystemState& s) {
    append_rank_ordered(s, trace.xi_points);
    trace.jumps.push_back(jumps_in_interval);
    trace.events.push_back(events_in_interval);
    jumps_in_interval = 0;
    events_in_interval = 0;
  };
  fv_run(state, static_cast<double>(n_intervals) * interval, config.dt, obs, opts);

  const std::size_t total_events =
      std::accumulate(trace.events.begin(), trace.events.end(), std::size_t{0});
  if (total_events < 1000) {
    throw InsufficientDataError("estimate_stationary: only " +
                                std::to_string(total_events) +
                                " post-burn-in jump events (need 1000)");
  }

  StationarySummary out;
  out.n_particles = n;
  out.burn_in_used = burn_in;
  out.finite_rate_guaranteed = n >= kFiniteRateMinN;

  std::vector<double> rates(trace.jumps.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    rates[k] = static_cast<double>(trace.jumps[k]) /
               (static_cast<double>(n) * interval);
  }
  out.lambda_hat = batch_means(rates, config.n_batches);
  out.mean_interjump = batch_means(trace.interjump, config.n_batches);
  out.xi_hat = EmpiricalMeasure(trace.xi_points);
  out.varpi_hat = EmpiricalMeasure(trace.varpi_points);
  out.trace = std::move(trace);
  return out;
}

std::vector<double> time_average_series(const StationarySummary& s,
                                        const std::function<double(double)>& f) {
  const auto& t = s.trace;
  const std::size_t n = t.n_particles;
  std::vector<double> out(t.jumps.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += f(t.xi_points[k * n + i]);
    out[k] = acc / static_cast<double>(n);
  }
  return out;
}

std::vector<double> jump_weighted_series(const StationarySummary& s,
                                         std::span<const double> g_of_varpi) {
  const auto& t = s.trace;
  const std::size_t n = t.n_particles;
  if (g_of_varpi.size() != t.varpi_points.size()) {
    throw std::invalid_argument("jump_weighted_series: size mismatch");
  }
  std::vector<double> out(t.events.size());
  std::size_t offset = 0;
  const double scale = 1.0 / (static_cast<double>(n) * t.interval);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = 0.0;
    for (std::size_t e = 0; e < t.events[k]; ++e) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += g_of_varpi[offset + i];
      acc += m / static_cast<double>(n);
      offset += n;
    }
    out[k] = acc * scale;
  }
  return out;
}

EstimatorResult interjump_identity(const StationarySummary& s) {
  const double n = static_cast<double>(s.n_particles);
  const auto& l = s.lambda_hat;
  const auto& m = s.mean_interjump;
  const double value = l.estimate * n * m.estimate;
  const double rel = std::hypot(l.std_error / l.estimate, m.std_error / m.estimate);
  return make_estimate(value, std::abs(value) * rel,
                       std::min(l.n_effective, m.n_effective));
}

EstimatorResult g1_identity(const StationarySummary& s) {
  return batch_means(jump_weighted_series(s, s.trace.varpi_points),
                     s.trace.n_batches);
}

std::pair<EstimatorResult, EstimatorResult> split_half_lambda(
    const StationarySummary& s) {
  const auto& t = s.trace;
  std::vector<double> rates(t.jumps.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    rates[k] = static_cast<double>(t.jumps[k]) /
               (static_cast<double>(t.n_particles) * t.interval);
  }
  const std::size_t half = rates.size() / 2;
  const std::span<const double> all(rates);
  return {batch_means(all.first(half), t.n_batches),
          batch_means(all.subspan(half), t.n_batches)};
}

GreenCheck green_identity_check(const StationarySummary& s,
                                const std::function<double(double)>& f) {
  const auto& pts = s.trace.varpi_points;
  std::vector<double> grid(pts.begin(), pts.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto g_grid = green_apply(f, grid);
  std::vector<double> g_pts(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), pts[i]);
    g_pts[i] = g_grid[static_cast<std::size_t>(it - grid.begin())];
  }

  const auto lhs_series = time_average_series(s, f);
  const auto rhs_series = jump_weighted_series(s, g_pts);
  std::vector<double> diff(lhs_series.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = lhs_series[k] - rhs_series[k];
  const auto d = batch_means(diff, s.trace.n_batches);

  GreenCheck out;
  out.lhs = s.xi_hat.integrate(f);
  double varpi_g = 0.0;
  for (double g : g_pts) varpi_g += g;
  varpi_g /= static_cast<double>(g_pts.size());
  out.rhs = s.lambda_hat.estimate * varpi_g;
  out.std_error = d.std_error;
  if (d.std_error > 0.0) {
    out.z_score = d.estimate / d.std_error;
  } else {
    out.z_score = d.estimate == 0.0 ? 0.0 : std::copysign(INFINITY, d.estimate);
  }
  return out;
}

double iota(std::size_t n) {
  if (n < 2) throw std::domain_error("iota: N must be >= 2");
  const double nd = static_cast<double>(n);
  return -nd * std::log1p(-1.0 / nd);
}

double lambda_lower_bound(std::size_t n) { return kLambdaMin / iota(n); }

}  // namespace fvselect
