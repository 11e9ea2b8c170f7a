#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fvselect/fleming_viot.hpp"
#include "fvselect/qsd_analytics.hpp"

using namespace fvselect;

namespace {

StationaryConfig base_config(std::size_t n, double horizon, double burn_in,
                             std::uint64_t seed) {
  StationaryConfig c;
  c.n_particles = n;
  c.horizon = horizon;
  c.burn_in = burn_in;
  c.seed = seed;
  c.initial = qsd_sampler(minimal_qsd());
  return c;
}

}  // namespace

TEST_CASE("initialisation") {
  const auto s = fv_init(2, std::vector<double>{1.0, 2.0}, 1);
  CHECK(s.size() == 2);
  CHECK(s.positions == std::vector<double>{1.0, 2.0});
  CHECK(s.jumps == 0);
  CHECK(s.time == 0.0);

  const auto t = fv_init(100, qsd_sampler(minimal_qsd()), 2);
  CHECK(t.size() == 100);
  for (double x : t.positions) CHECK(x > 0.0);

  CHECK_THROWS_AS(fv_init(1, std::vector<double>{1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(fv_init(2, std::vector<double>{1.0, 0.0}, 1), std::domain_error);
  CHECK_THROWS_AS(fv_init(2, std::vector<double>{1.0, -3.0}, 1), std::domain_error);
  CHECK_THROWS_AS(fv_init(3, std::vector<double>{1.0, 2.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(fv_init(2, std::vector<double>{1.0, 2.0}, 1, {5, 5}), std::invalid_argument);
}

TEST_CASE("a step far from the boundary only diffuses") {
  auto s = fv_init(10, std::vector<double>(10, 50.0), 3);
  const auto events = fv_step(s, 1e-3);
  CHECK(events.empty());
  CHECK(s.jumps == 0);
  CHECK(s.time == doctest::Approx(1e-3));
  for (double x : s.positions) CHECK(x != 50.0);
}

TEST_CASE("with two particles the dying one lands on the other") {
  // Particle 0 starts next to the boundary, particle 1 far away.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = fv_init(2, std::vector<double>{1e-9, 50.0}, seed);
    const auto events = fv_step(s, 1e-2, {BridgeCorrection::on, true});
    REQUIRE(events.size() == 1);
    CHECK(events[0].dying_index == 0);
    CHECK(events[0].target_index == 1);
    CHECK(s.positions[0] == s.positions[1]);
    CHECK(events[0].positions_snapshot == s.positions);
    CHECK(s.jumps == 1);
  }
}

TEST_CASE("all particles killed in one step is reported") {
  auto s = fv_init(2, std::vector<double>{1e-12, 1e-12}, 4);
  CHECK_THROWS_AS(fv_step(s, 1.0), MassExtinctionError);
}

TEST_CASE("short-run jump rate and observer contract") {
  auto s = fv_init(100, qsd_sampler(minimal_qsd()), 5);
  std::uint64_t last = 0;
  std::size_t steps = 0;
  FvObservers obs;
  obs.on_step = [&](const ParticleSystemState& st, std::span<const JumpEvent> ev) {
    ++steps;
    CHECK(st.jumps >= last);
    CHECK(st.jumps - last == ev.size());
    last = st.jumps;
    REQUIRE(st.size() == 100);
    for (double x : st.positions) REQUIRE(x > 0.0);
    for (const auto& e : ev) {
      CHECK(e.dying_index != e.target_index);
      CHECK(e.time == st.time);
    }
  };
  fv_run(s, 1.0, 1e-3, obs);
  CHECK(steps == 1000);
  CHECK(std::abs(s.jump_count_normalised() - 0.5) < 0.15);
}

TEST_CASE("zero horizon is a no-op") {
  auto s = fv_init(5, std::vector<double>(5, 1.0), 6);
  int calls = 0;
  FvObservers obs;
  obs.on_step = [&](const ParticleSystemState&, std::span<const JumpEvent>) { ++calls; };
  fv_run(s, 0.0, 1e-3, obs);
  CHECK(calls == 0);
  CHECK(s.time == 0.0);
  CHECK(s.positions == std::vector<double>(5, 1.0));
}

TEST_CASE("jump counts grow linearly in stationarity") {
  auto s = fv_init(100, qsd_sampler(minimal_qsd()), 7);
  fv_run(s, 20.0, 1e-3, {});
  const auto j0 = s.jumps;
  // the cloud's mass near 0 fluctuates collectively, so windows must be long
  fv_run(s, 200.0, 1e-3, {});
  const auto j50 = s.jumps - j0;
  fv_run(s, 200.0, 1e-3, {});
  const auto j100 = s.jumps - j0;
  const double ratio = static_cast<double>(j100) / static_cast<double>(j50);
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
}

TEST_CASE("constants") {
  CHECK(iota(100) == doctest::Approx(-100.0 * std::log(0.99)).epsilon(1e-15));
  CHECK(iota(100) == doctest::Approx(1.005034).epsilon(1e-6));
  CHECK(lambda_lower_bound(100) == doctest::Approx(0.5 / 1.0050335853501).epsilon(1e-12));
  // iota_N decreases to 1
  for (std::size_t n = 2; n < 500; ++n) CHECK(iota(n + 1) < iota(n));
  CHECK_THROWS(iota(1));
}

TEST_CASE("stationary run at N = 100") {
  const auto s = estimate_stationary(base_config(100, 500.0, 50.0, 8));
  CHECK(s.n_particles == 100);
  CHECK(s.burn_in_used == 50.0);
  CHECK(s.finite_rate_guaranteed);
  CHECK(s.lambda_hat.estimate > 0.0);
  for (double x : s.xi_hat.points()) REQUIRE(x > 0.0);

  SUBCASE("lower bound on the jump rate") {
    CHECK(s.lambda_hat.estimate >= lambda_lower_bound(100) - 3.0 * s.lambda_hat.std_error);
  }
  SUBCASE("mean inter-jump time is 1 / (N lambda)") {
    const auto r = interjump_identity(s);
    CHECK(std::abs(r.estimate - 1.0) <= 3.0 * r.std_error);
  }
  SUBCASE("lambda varpi(G1) = 1") {
    const auto r = g1_identity(s);
    CHECK(std::abs(r.estimate - 1.0) <= 3.0 * r.std_error);
    // The plain product agrees with the series estimate.
    CHECK(s.lambda_hat.estimate * s.varpi_hat.mean() == doctest::Approx(r.estimate).epsilon(0.01));
  }
  SUBCASE("Green identity") {
    const auto one = green_identity_check(s, [](double) { return 1.0; });
    CHECK(one.lhs == doctest::Approx(1.0));
    CHECK(std::abs(one.rhs - 1.0) <= 3.0 * one.std_error);
    CHECK(std::abs(one.z_score) <= 3.0);
    const auto zero = green_identity_check(s, [](double) { return 0.0; });
    CHECK(zero.lhs == 0.0);
    CHECK(zero.rhs == 0.0);
    CHECK(zero.z_score == 0.0);
    const auto e = green_identity_check(s, [](double x) { return std::exp(-x); });
    CHECK(std::abs(e.z_score) <= 3.0);
  }
  SUBCASE("split halves agree") {
    const auto [a, b] = split_half_lambda(s);
    CHECK(std::abs(a.estimate - b.estimate) <= 3.0 * std::hypot(a.std_error, b.std_error));
  }
}

TEST_CASE("initial conditions are forgotten") {
  auto a = base_config(100, 250.0, 50.0, 9);
  auto b = a;
  b.seed = 10;
  b.initial = std::vector<double>(100, 5.0);
  const auto sa = estimate_stationary(a);
  const auto sb = estimate_stationary(b);
  CHECK(std::abs(sa.lambda_hat.estimate - sb.lambda_hat.estimate) <=
        3.0 * std::hypot(sa.lambda_hat.std_error, sb.lambda_hat.std_error));
  // xi means via batch means of the per-interval averages
  const auto ma = batch_means(time_average_series(sa, [](double x) { return x; }), 30);
  const auto mb = batch_means(time_average_series(sb, [](double x) { return x; }), 30);
  CHECK(std::abs(ma.estimate - mb.estimate) <= 3.0 * std::hypot(ma.std_error, mb.std_error));
  CHECK(w1(sa.xi_hat, sb.xi_hat) < 0.15);
}

TEST_CASE("exchangeability under relabelling") {
  Rng rng(11);
  std::vector<double> pos = qsd_sample(minimal_qsd(), 30, rng);
  std::vector<std::uint64_t> ids(30);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> pos2(30);
  std::vector<std::uint64_t> ids2(30);
  for (std::size_t i = 0; i < 30; ++i) {
    pos2[i] = pos[perm[i]];
    ids2[i] = ids[perm[i]];
  }
  auto a = base_config(30, 100.0, 20.0, 12);
  a.initial = pos;
  a.stream_ids = ids;
  auto b = a;
  b.initial = pos2;
  b.stream_ids = ids2;
  const auto sa = estimate_stationary(a);
  const auto sb = estimate_stationary(b);
  CHECK(sa.lambda_hat.estimate == sb.lambda_hat.estimate);
  CHECK(sa.trace.xi_points == sb.trace.xi_points);
  CHECK(sa.trace.varpi_points == sb.trace.varpi_points);
  CHECK(sa.trace.interjump == sb.trace.interjump);
}

TEST_CASE("determinism and event log") {
  auto c = base_config(20, 120.0, 20.0, 13);
  c.event_log_limit = 50;
  const auto a = estimate_stationary(c);
  const auto b = estimate_stationary(c);
  CHECK(a.lambda_hat.estimate == b.lambda_hat.estimate);
  CHECK(a.trace.xi_points == b.trace.xi_points);
  REQUIRE(a.trace.event_log.size() == 50);
  for (const auto& e : a.trace.event_log) {
    CHECK(e.dying_stream != e.target_stream);
    CHECK(e.position > 0.0);
    CHECK(e.time > 20.0);
  }
  CHECK(a.n_particles == 20);
}

TEST_CASE("small N carries the finiteness flag") {
  const auto s = estimate_stationary(base_config(5, 600.0, 20.0, 14));
  CHECK_FALSE(s.finite_rate_guaranteed);
  CHECK(s.lambda_hat.estimate > 0.0);
}

TEST_CASE("insufficient data") {
  CHECK_THROWS_AS(estimate_stationary(base_config(10, 22.0, 20.0, 15)), InsufficientDataError);
  // Enough intervals but too few events (N = 2 risks a mass extinction).
  auto c = base_config(5, 30.0, 20.0, 16);
  CHECK_THROWS_AS(estimate_stationary(c), InsufficientDataError);
  auto d = base_config(10, 30.0, 20.0, 16);
  d.n_batches = 10;
  CHECK_THROWS_AS(estimate_stationary(d), InsufficientDataError);
}
