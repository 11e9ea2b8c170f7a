#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fvselect/measures_stats.hpp"
#include "fvselect/qsd_analytics.hpp"

using namespace fvselect;

namespace {

/// Exact optimal transport between two equal-weight n-point measures under
/// cost c: an optimal plan is a permutation, so enumerate them all.
double brute_force_ot(std::vector<double> a, const std::vector<double>& b,
                      double (*cost)(double, double)) {
  std::sort(a.begin(), a.end());
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += cost(a[i], b[i]);
    best = std::min(best, s / static_cast<double>(a.size()));
  } while (std::next_permutation(a.begin(), a.end()));
  return best;
}

double cost_abs(double x, double y) { return std::abs(x - y); }
double cost_trunc(double x, double y) { return std::min(1.0, std::abs(x - y)); }

std::vector<double> small_points(Rng& rng, std::size_t n) {
  // Quarter-integer atoms keep every partial sum exact in binary.
  std::vector<double> p(n);
  for (auto& x : p) x = 0.25 * static_cast<double>(1 + rng.below(16));
  return p;
}

}  // namespace

TEST_CASE("empirical measure construction") {
  EmpiricalMeasure m({3.0, 1.0, 2.0});
  CHECK(std::is_sorted(m.points().begin(), m.points().end()));
  const auto w = m.weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.mean() == doctest::Approx(2.0));
  CHECK(m.cdf(1.5) == doctest::Approx(1.0 / 3.0));
  CHECK(m.quantile(0.5) == 2.0);

  EmpiricalMeasure weighted({1.0, 2.0}, {1.0, 3.0});
  CHECK(weighted.mean() == doctest::Approx(1.75));

  CHECK_THROWS_AS(EmpiricalMeasure(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure({0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure({-1.0}), std::invalid_argument);
  CHECK_NOTHROW(EmpiricalMeasure({0.0, 1.0}, Support::non_negative));
  CHECK_NOTHROW(EmpiricalMeasure({-1.0}, Support::real));
  CHECK_THROWS_AS(EmpiricalMeasure({1.0, 2.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure({1.0}, {-1.0}), std::invalid_argument);
}

TEST_CASE("trivial distances") {
  const EmpiricalMeasure a({1.0, 2.0, 5.0});
  CHECK(w1(a, a) == 0.0);
  CHECK(ks(a, a) == 0.0);
  const auto d1 = EmpiricalMeasure::point_mass(1.0);
  const auto d3 = EmpiricalMeasure::point_mass(3.0);
  CHECK(w1(d1, d3) == doctest::Approx(2.0));
  CHECK(ks(d1, d3) == doctest::Approx(1.0));
  CHECK(w1_truncated(d1, d3) == doctest::Approx(1.0));
  CHECK(w1_truncated(d1, EmpiricalMeasure::point_mass(1.25)) == doctest::Approx(0.25));
}

TEST_CASE("distances against analytic laws") {
  const auto e1 = exponential_law(1.0), e2 = exponential_law(2.0);
  // |mean difference| when the CDFs do not cross.
  CHECK(w1(e1, e2) == doctest::Approx(0.5).epsilon(1e-8));
  const auto d = EmpiricalMeasure::point_mass(1.0);
  // int_0^1 (1 - e^{-x}) dx + int_1^inf e^{-x} dx = 2/e
  CHECK(w1(d, e1) == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-10));
  // largest gap just below the atom: F_e(1) - 0
  CHECK(ks(d, e1) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(w1(d, qsd_law(minimal_qsd())) > 0.0);
}

TEST_CASE("empirical process rates for pi_min samples") {
  Rng rng(11);
  const auto q = minimal_qsd();
  const EmpiricalMeasure m(qsd_sample(q, 1000000, rng));
  const auto law = qsd_law(q);
  CHECK(w1(m, law) < 0.005);
  // DKW: P(KS > 0.002) <= 2 exp(-2 n 0.002^2) ~ 7e-4.
  CHECK(ks(m, law) < 0.002);
}

TEST_CASE("analytic W1 agrees with a dense discretisation") {
  Rng rng(12);
  const auto q = make_qsd(0.375);
  const auto law = qsd_law(q);
  const EmpiricalMeasure probe(qsd_sample(minimal_qsd(), 2000, rng));
  const EmpiricalMeasure dense(qsd_sample(q, 10000000, rng));
  CHECK(std::abs(w1(probe, law) - w1(probe, dense)) < 0.002);
}

TEST_CASE("metric axioms on small measures") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(10);
    const EmpiricalMeasure a(small_points(rng, n)), b(small_points(rng, 1 + rng.below(10))),
        c(small_points(rng, 1 + rng.below(10)));
    CHECK(w1(a, b) == doctest::Approx(w1(b, a)).epsilon(1e-14));
    CHECK(ks(a, b) == doctest::Approx(ks(b, a)).epsilon(1e-14));
    CHECK(w1_truncated(a, b) == doctest::Approx(w1_truncated(b, a)).epsilon(1e-12));
    CHECK(w1(a, a) == 0.0);
    CHECK(w1_truncated(a, a) == doctest::Approx(0.0));
    CHECK(w1(a, c) <= w1(a, b) + w1(b, c) + 1e-12);
    CHECK(ks(a, c) <= ks(a, b) + ks(b, c) + 1e-12);
    CHECK(w1_truncated(a, c) <= w1_truncated(a, b) + w1_truncated(b, c) + 1e-12);
    CHECK(w1_truncated(a, b) <= w1(a, b) + 1e-12);
  }
}

TEST_CASE("W1 and truncated W1 match brute-force transport") {
  Rng rng(6);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = 0.1 + 3.0 * rng.uniform();
    for (auto& x : b) x = 0.1 + 3.0 * rng.uniform();
    const EmpiricalMeasure ma(a), mb(b);
    CHECK(w1(ma, mb) == doctest::Approx(brute_force_ot(a, b, cost_abs)).epsilon(1e-10));
    CHECK(w1_truncated(ma, mb) ==
          doctest::Approx(brute_force_ot(a, b, cost_trunc)).epsilon(1e-10));
  }
}

TEST_CASE("empty measures are rejected by distances") {
  const EmpiricalMeasure empty;
  const auto d = EmpiricalMeasure::point_mass(1.0);
  CHECK_THROWS(w1(empty, d));
  CHECK_THROWS(ks(d, empty));
  CHECK_THROWS(w1(empty, exponential_law(1.0)));
  CHECK_THROWS(w1_truncated(empty, d));
}

TEST_CASE("batch means") {
  SUBCASE("constant series") {
    const std::vector<double> s(1000, 3.5);
    const auto r = batch_means(s, 20);
    CHECK(r.estimate == 3.5);
    CHECK(r.std_error == 0.0);
    CHECK(r.ci_low <= r.estimate);
    CHECK(r.estimate <= r.ci_high);
  }
  SUBCASE("iid normal: SE close to 1/sqrt(n)") {
    Rng rng(8);
    std::vector<double> s(10000);
    for (auto& x : s) x = rng.normal();
    const auto r = batch_means(s, 20);
    CHECK(r.std_error > 0.005);
    CHECK(r.std_error < 0.015);
    CHECK(r.n_effective > 0.0);
    CHECK(r.ci_low <= r.estimate);
    CHECK(r.estimate <= r.ci_high);
  }
  SUBCASE("AR(1) with rho 0.9 inflates the SE") {
    Rng rng(9);
    std::vector<double> iid(100000), ar(100000);
    double x = 0.0;
    for (std::size_t i = 0; i < ar.size(); ++i) {
      const double z = rng.normal();
      iid[i] = z;
      x = 0.9 * x + std::sqrt(1.0 - 0.81) * z;
      ar[i] = x;
    }
    const double naive = std::sqrt(sample_variance(ar) / static_cast<double>(ar.size()));
    const auto r = batch_means(ar, 20);
    CHECK(r.std_error > naive);
    CHECK(r.std_error > batch_means(iid, 20).std_error);
    // inflation sqrt((1 + rho)/(1 - rho)) = sqrt(19)
    CHECK(r.std_error / naive > 2.5);
    CHECK(r.std_error / naive < 7.0);
  }
  SUBCASE("preconditions") {
    const std::vector<double> s(100, 1.0);
    CHECK_THROWS_AS(batch_means(s, 19), std::invalid_argument);
    CHECK_THROWS_AS(batch_means(std::vector<double>(39, 1.0), 20), std::invalid_argument);
  }
}

TEST_CASE("bootstrap SE of the mean") {
  Rng rng(10);
  std::vector<double> s(2000);
  for (auto& x : s) x = rng.normal();
  const auto r = bootstrap(
      s, [](std::span<const double> xs) { return sample_mean(xs); }, 400, rng);
  const double expected = 1.0 / std::sqrt(2000.0);
  CHECK(r.std_error > 0.8 * expected);
  CHECK(r.std_error < 1.2 * expected);
  CHECK(r.ci_low <= r.estimate);
  CHECK(r.estimate <= r.ci_high);
}
