#include "fvselect/nbbm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fvselect/qsd_analytics.hpp"

namespace fvselect {

double NbbmState::min() const {
  return *std::min_element(positions.begin(), positions.end());
}

double NbbmState::median() const {
  auto copy = positions;
  const auto mid = copy.begin() + static_cast<std::ptrdiff_t>(copy.size() / 2);
  std::nth_element(copy.begin(), mid, copy.end());
  if (copy.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(copy.begin(), mid);
  return 0.5 * (lower + upper);
}

NbbmState nbbm_init(std::size_t n, std::uint64_t seed,
                    std::vector<double> positions) {
  if (n < 2) throw std::invalid_argument("nbbm_init: N must be >= 2");
  if (positions.empty()) positions.assign(n, 0.0);
  if (positions.size() != n) {
    throw std::invalid_argument("nbbm_init: expected N initial positions");
  }
  NbbmState s;
  s.positions = std::move(positions);
  s.rng.reseed(derive_seed(seed, tag_hash("nbbm"), 0, 0));
  return s;
}

void nbbm_step(NbbmState& state, double dt) {
  if (!(dt > 0.0) || dt > 0.01) {
    throw std::domain_error("nbbm_step: dt must lie in (0, 0.01]");
  }
  const std::size_t n = state.size();
  const double sd = std::sqrt(dt);
  for (auto& x : state.positions) x += sd * state.rng.normal();
  state.time += dt;

  // Bernoulli(1 - e^{-dt}) per particle, drawn by geometric skipping.
  const double log_stay = -dt;  // log(1 - p)
  std::vector<std::size_t> branchers;
  for (double pos = -1.0;;) {
    pos += 1.0 + std::floor(std::log(state.rng.uniform_open()) / log_stay);
    if (pos >= static_cast<double>(n)) break;
    branchers.push_back(static_cast<std::size_t>(pos));
  }
  if (branchers.empty()) return;
  for (std::size_t k = branchers.size(); k > 1; --k) {
    std::swap(branchers[k - 1], branchers[state.rng.below(k)]);
  }
  std::vector<char> replaced(n, 0);
  for (std::size_t b : branchers) {
    // A particle removed earlier in this step no longer branches.
    if (replaced[b]) continue;
    const auto lowest = static_cast<std::size_t>(
        std::min_element(state.positions.begin(), state.positions.end()) -
        state.positions.begin());
    if (lowest != b) {
      state.positions[lowest] = state.positions[b];
      replaced[lowest] = 1;
    }
    ++state.branch_count;
  }
}

FrontTrajectory nbbm_run(NbbmState& state, double horizon, double dt,
                         std::size_t record_every,
                         const std::function<void(const NbbmState&)>& on_record) {
  if (horizon < 0.0) throw std::domain_error("nbbm_run: horizon must be >= 0");
  if (record_every == 0) throw std::invalid_argument("nbbm_run: record_every must be > 0");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  FrontTrajectory traj;
  for (std::size_t s = 1; s <= steps; ++s) {
    nbbm_step(state, dt);
    if (s % record_every == 0) {
      traj.times.push_back(state.time);
      traj.min.push_back(state.min());
      traj.median.push_back(state.median());
      if (on_record) on_record(state);
    }
  }
  return traj;
}

EstimatorResult front_speed(std::span<const double> times,
                            std::span<const double> front,
                            std::size_t fit_window) {
  constexpr std::size_t kBatches = 20;
  if (times.size() != front.size()) {
    throw std::invalid_argument("front_speed: times and front differ in length");
  }
  if (fit_window < 2 * kBatches) {
    throw std::invalid_argument("front_speed: fit_window must be >= 40 samples");
  }
  if (times.size() < 2 * fit_window) {
    throw std::invalid_argument(
        "front_speed: trajectory shorter than twice the fit window");
  }
  const auto t = times.last(fit_window);
  const auto y = front.last(fit_window);
  const double kd = static_cast<double>(fit_window);
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < fit_window; ++i) {
    st += t[i];
    sy += y[i];
  }
  const double tm = st / kd, ym = sy / kd;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < fit_window; ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
    syy += (y[i] - ym) * (y[i] - ym);
  }
  if (!(stt > 0.0)) throw std::invalid_argument("front_speed: degenerate time axis");
  if (!(syy > 0.0)) {
    throw std::invalid_argument("front_speed: constant trajectory, degenerate fit");
  }
  const double slope = sty / stt;

  const std::size_t m = fit_window / kBatches;
  const std::size_t offset = fit_window - m * kBatches;
  std::vector<double> rates(kBatches);
  for (std::size_t b = 0; b < kBatches; ++b) {
    const std::size_t lo = offset + b * m;
    const std::size_t hi = lo + m - 1;
    rates[b] = (y[hi] - y[lo]) / (t[hi] - t[lo]);
  }
  double se = std::sqrt(sample_variance(rates) / static_cast<double>(kBatches));
  if (se < 1e-12 * std::abs(slope)) se = 0.0;
  return make_estimate(slope, se, static_cast<double>(kBatches));
}

std::function<double(double)> wave_profile(double c) {
  if (!(c >= kMinWaveSpeed * (1.0 - 1e-15))) {
    throw std::domain_error("wave_profile: no travelling wave below speed sqrt(2)");
  }
  const auto q = make_qsd(std::min(kLambdaMin, 1.0 / (c * c)));
  return [q, c](double x) { return x < 0.0 ? 0.0 : c * qsd_density(q, c * x); };
}

AnalyticLaw wave_law(double c) {
  const auto density = wave_profile(c);
  const auto q = make_qsd(std::min(kLambdaMin, 1.0 / (c * c)));
  const auto base = qsd_law(q);
  AnalyticLaw law;
  law.name = "w_" + std::to_string(c);
  law.cdf = [base, c](double x) { return base.cdf(c * x); };
  law.integrated_cdf = [base, c](double x) { return base.integrated_cdf(c * x) / c; };
  law.density = density;
  law.mean = base.mean / c;
  return law;
}

EmpiricalMeasure centered_profile(const NbbmState& state) {
  const double lo = state.min();
  std::vector<double> shifted(state.positions);
  for (auto& x : shifted) x -= lo;
  return EmpiricalMeasure(std::move(shifted), Support::non_negative);
}

}  // namespace fvselect
