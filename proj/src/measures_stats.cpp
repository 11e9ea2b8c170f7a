#include "fvselect/measures_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fvselect {

namespace {

void check_support(std::span<const double> points, Support support) {
  for (double x : points) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("EmpiricalMeasure: non-finite atom");
    }
    if (support == Support::positive && !(x > 0.0)) {
      throw std::invalid_argument(
          "EmpiricalMeasure: atom outside the positive half-line");
    }
    if (support == Support::non_negative && x < 0.0) {
      throw std::invalid_argument("EmpiricalMeasure: negative atom");
    }
  }
}

void require_non_empty(const EmpiricalMeasure& m) {
  if (m.empty()) throw std::invalid_argument("empty measure");
}

double integrate_cdf(const AnalyticLaw& law, double a, double b) {
  if (b <= a) return 0.0;
  if (law.integrated_cdf) {
    return law.integrated_cdf(std::max(b, 0.0)) -
           law.integrated_cdf(std::max(a, 0.0));
  }
  a = std::max(a, 0.0);
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      law.cdf, a, b, 10, 1e-13);
}

double law_cdf(const AnalyticLaw& law, double x) {
  return x <= 0.0 ? 0.0 : law.cdf(x);
}

/// Integral of (1 - F) over [a, inf).
double upper_tail_integral(const AnalyticLaw& law, double a) {
  a = std::max(a, 0.0);
  if (law.integrated_cdf && std::isfinite(law.mean)) {
    return std::max(law.mean - a + law.integrated_cdf(a), 0.0);
  }
  auto survival = [&](double x) { return 1.0 - law.cdf(x); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      survival, a, std::numeric_limits<double>::infinity(), 15, 1e-13);
}

/// Root of F(x) = level on [a, b], with F(a) < level < F(b).
double cdf_crossing(const AnalyticLaw& law, double a, double b, double level) {
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b));
       ++it) {
    const double mid = 0.5 * (a + b);
    if (law_cdf(law, mid) < level) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

/// Integral of |level - F| over [a, b] for monotone F.
double abs_gap_integral(const AnalyticLaw& law, double a, double b,
                        double level) {
  if (b <= a) return 0.0;
  const double fa = law_cdf(law, a);
  const double fb = law_cdf(law, b);
  if (fa >= level) return integrate_cdf(law, a, b) - level * (b - a);
  if (fb <= level) return level * (b - a) - integrate_cdf(law, a, b);
  const double r = cdf_crossing(law, a, b, level);
  return (level * (r - a) - integrate_cdf(law, a, r)) +
         (integrate_cdf(law, r, b) - level * (b - r));
}

struct Atom {
  double x;
  double wa;
  double wb;
};

std::vector<Atom> merge_atoms(const EmpiricalMeasure& a,
                              const EmpiricalMeasure& b) {
  std::vector<Atom> out;
  out.reserve(a.size() + b.size());
  auto pa = a.points(), wa = a.weights();
  auto pb = b.points(), wb = b.weights();
  std::size_t i = 0, j = 0;
  while (i < pa.size() || j < pb.size()) {
    double x;
    if (j >= pb.size() || (i < pa.size() && pa[i] <= pb[j])) {
      x = pa[i];
    } else {
      x = pb[j];
    }
    Atom atom{x, 0.0, 0.0};
    while (i < pa.size() && pa[i] == x) atom.wa += wa[i++];
    while (j < pb.size() && pb[j] == x) atom.wb += wb[j++];
    out.push_back(atom);
  }
  return out;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points, Support support)
    : EmpiricalMeasure(std::move(points), {}, support) {}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points,
                                   std::vector<double> weights,
                                   Support support) {
  if (points.empty()) throw std::invalid_argument("EmpiricalMeasure: empty");
  check_support(points, support);
  if (weights.empty()) {
    std::sort(points.begin(), points.end());
    weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
    points_ = std::move(points);
    weights_ = std::move(weights);
    return;
  }
  if (weights.size() != points.size()) {
    throw std::invalid_argument("EmpiricalMeasure: weight count mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("EmpiricalMeasure: negative weight");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("EmpiricalMeasure: zero total weight");
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return points[l] < points[r]; });
  points_.reserve(points.size());
  weights_.reserve(points.size());
  for (std::size_t k : order) {
    points_.push_back(points[k]);
    weights_.push_back(weights[k] / total);
  }
}

double EmpiricalMeasure::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) s += weights_[i] * points_[i];
  return s;
}

double EmpiricalMeasure::integrate(
    const std::function<double(double)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    s += weights_[i] * f(points_[i]);
  }
  return s;
}

double EmpiricalMeasure::cdf(double x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size() && points_[i] <= x; ++i) {
    s += weights_[i];
  }
  return std::min(s, 1.0);
}

double EmpiricalMeasure::quantile(double u) const {
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    s += weights_[i];
    if (s >= u - 1e-15) return points_[i];
  }
  return points_.back();
}

AnalyticLaw exponential_law(double rate) {
  if (!(rate > 0.0)) throw std::domain_error("exponential_law: rate <= 0");
  AnalyticLaw law;
  law.name = "Exp(" + std::to_string(rate) + ")";
  law.cdf = [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); };
  law.integrated_cdf = [rate](double x) {
    return x <= 0.0 ? 0.0 : x + std::expm1(-rate * x) / rate;
  };
  law.density = [rate](double x) {
    return x < 0.0 ? 0.0 : rate * std::exp(-rate * x);
  };
  law.mean = 1.0 / rate;
  return law;
}

double w1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require_non_empty(a);
  require_non_empty(b);
  const auto atoms = merge_atoms(a, b);
  double fa = 0.0, fb = 0.0, total = 0.0;
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    fa += atoms[k].wa;
    fb += atoms[k].wb;
    total += std::abs(fa - fb) * (atoms[k + 1].x - atoms[k].x);
  }
  return total;
}

double w1(const EmpiricalMeasure& a, const AnalyticLaw& b) {
  require_non_empty(a);
  auto pts = a.points();
  auto wts = a.weights();
  double total = 0.0;
  // Below the first atom the empirical CDF vanishes.
  if (pts.front() > 0.0) total += integrate_cdf(b, 0.0, pts.front());
  double level = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    const double x = pts[i];
    while (i < pts.size() && pts[i] == x) level += wts[i++];
    if (i == pts.size()) break;
    const double next = pts[i];
    if (next <= 0.0) {
      total += level * (next - x);
    } else if (x < 0.0) {
      total += level * (0.0 - x) + abs_gap_integral(b, 0.0, next, level);
    } else {
      total += abs_gap_integral(b, x, next, level);
    }
  }
  const double last = pts.back();
  if (last < 0.0) total += -last;
  total += upper_tail_integral(b, last);
  return total;
}

double w1(const AnalyticLaw& a, const AnalyticLaw& b) {
  auto gap = [&](double x) { return std::abs(a.cdf(x) - b.cdf(x)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      gap, 0.0, std::numeric_limits<double>::infinity(), 20, 1e-12);
}

double ks(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require_non_empty(a);
  require_non_empty(b);
  double fa = 0.0, fb = 0.0, best = 0.0;
  for (const auto& atom : merge_atoms(a, b)) {
    fa += atom.wa;
    fb += atom.wb;
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

double ks(const EmpiricalMeasure& a, const AnalyticLaw& b) {
  require_non_empty(a);
  auto pts = a.points();
  auto wts = a.weights();
  double before = 0.0, best = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    const double x = pts[i];
    double after = before;
    while (i < pts.size() && pts[i] == x) after += wts[i++];
    const double f = law_cdf(b, x);
    best = std::max({best, std::abs(after - f), std::abs(f - before)});
    before = after;
  }
  return best;
}

namespace {

struct Knot {
  double x;
  double y;
};

/// Value of a concave piecewise-linear function at x inside its domain.
double eval_pl(const std::vector<Knot>& f, double x) {
  if (x <= f.front().x) return f.front().y;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (x <= f[i].x) {
      const double span = f[i].x - f[i - 1].x;
      if (span <= 0.0) return f[i].y;
      const double t = (x - f[i - 1].x) / span;
      return f[i - 1].y + t * (f[i].y - f[i - 1].y);
    }
  }
  return f.back().y;
}

/// g(v) = max over |u - v| <= delta of f(u), restricted to [0, 1].
std::vector<Knot> window_max(const std::vector<Knot>& f, double delta) {
  std::size_t peak = 0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i].y > f[peak].y) peak = i;
  }
  std::vector<Knot> shifted;
  shifted.reserve(f.size() + 1);
  for (std::size_t i = 0; i <= peak; ++i) shifted.push_back({f[i].x - delta, f[i].y});
  shifted.push_back({f[peak].x + delta, f[peak].y});
  for (std::size_t i = peak + 1; i < f.size(); ++i) {
    shifted.push_back({f[i].x + delta, f[i].y});
  }
  std::vector<Knot> out;
  out.reserve(shifted.size() + 2);
  out.push_back({0.0, eval_pl(shifted, 0.0)});
  for (const auto& k : shifted) {
    if (k.x > 0.0 && k.x < 1.0) out.push_back(k);
  }
  out.push_back({1.0, eval_pl(shifted, 1.0)});
  return out;
}

}  // namespace

double w1_truncated(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require_non_empty(a);
  require_non_empty(b);
  const auto atoms = merge_atoms(a, b);
  std::vector<Knot> value{{0.0, 0.0}, {1.0, atoms.front().wa - atoms.front().wb}};
  for (std::size_t k = 1; k < atoms.size(); ++k) {
    const double delta = atoms[k].x - atoms[k - 1].x;
    if (delta < 1.0) {
      value = window_max(value, delta);
    } else {
      // Lipschitz constraint is slack: any value in [0, 1] is reachable.
      double best = value.front().y;
      for (const auto& kn : value) best = std::max(best, kn.y);
      value = {{0.0, best}, {1.0, best}};
    }
    const double w = atoms[k].wa - atoms[k].wb;
    for (auto& kn : value) kn.y += w * kn.x;
  }
  double best = value.front().y;
  for (const auto& kn : value) best = std::max(best, kn.y);
  return std::max(best, 0.0);
}

EstimatorResult make_estimate(double estimate, double std_error,
                              double n_effective, double z) {
  return {estimate, std_error, estimate - z * std_error,
          estimate + z * std_error, n_effective};
}

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_mean: empty");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_variance: n < 2");
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

EstimatorResult batch_means(std::span<const double> series,
                            std::size_t n_batches) {
  if (n_batches < 20) {
    throw std::invalid_argument("batch_means: need at least 20 batches");
  }
  if (series.size() < 2 * n_batches) {
    throw std::invalid_argument(
        "batch_means: series shorter than twice the batch count");
  }
  const std::size_t m = series.size() / n_batches;
  const std::size_t offset = series.size() - m * n_batches;
  std::vector<double> means(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += series[offset + b * m + k];
    means[b] = s / static_cast<double>(m);
  }
  const double est = sample_mean(means);
  const double se =
      std::sqrt(sample_variance(means) / static_cast<double>(n_batches));
  const auto used = series.subspan(offset);
  const double n_used = static_cast<double>(used.size());
  double n_eff = n_used;
  if (se > 0.0) {
    n_eff = std::min(n_used, sample_variance(used) / (se * se));
    n_eff = std::max(n_eff, 1.0);
  }
  boost::math::students_t t(static_cast<double>(n_batches - 1));
  const double q = boost::math::quantile(boost::math::complement(t, 0.025));
  return make_estimate(est, se, n_eff, q);
}

EstimatorResult bootstrap(
    std::span<const double> sample,
    const std::function<double(std::span<const double>)>& statistic,
    std::size_t n_resamples, Rng& rng) {
  if (sample.empty()) throw std::invalid_argument("bootstrap: empty sample");
  if (n_resamples < 2) throw std::invalid_argument("bootstrap: n_resamples < 2");
  const double est = statistic(sample);
  std::vector<double> buf(sample.size());
  std::vector<double> reps(n_resamples);
  for (auto& r : reps) {
    for (auto& v : buf) v = sample[rng.below(sample.size())];
    r = statistic(buf);
  }
  return make_estimate(est, std::sqrt(sample_variance(reps)),
                       static_cast<double>(sample.size()));
}

}  // namespace fvselect
