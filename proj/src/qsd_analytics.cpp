#include "fvselect/qsd_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

namespace fvselect {

namespace {

// e^{-x} sinh(beta x) / beta, with the beta -> 0 limit x e^{-x}.
double em_sinhc(double beta, double x) {
  if (beta == 0.0) return x * std::exp(-x);
  if (beta * x > 20.0) {
    return (std::exp(-(1.0 - beta) * x) - std::exp(-(1.0 + beta) * x)) /
           (2.0 * beta);
  }
  return std::exp(-x) * std::sinh(beta * x) / beta;
}

// e^{-x} cosh(beta x).
double em_cosh(double beta, double x) {
  if (beta * x > 20.0) {
    return 0.5 * (std::exp(-(1.0 - beta) * x) + std::exp(-(1.0 + beta) * x));
  }
  return std::exp(-x) * std::cosh(beta * x);
}

// P(X > x) under the QSD.
double qsd_tail(const QsdParams& q, double x) {
  return em_sinhc(q.beta, x) + em_cosh(q.beta, x);
}

// int_x^inf P(X > s) ds under the QSD.
double qsd_tail_integral(const QsdParams& q, double x) {
  const double b2 = q.beta * q.beta;
  return ((1.0 + b2) * em_sinhc(q.beta, x) + 2.0 * em_cosh(q.beta, x)) /
         (1.0 - b2);
}

}  // namespace

QsdParams make_qsd(double lambda) {
  if (!(lambda > 0.0) || lambda > kLambdaMin) {
    throw std::domain_error("make_qsd: lambda must lie in (0, 1/2], got " +
                            std::to_string(lambda));
  }
  QsdParams q;
  q.lambda = lambda;
  q.beta = std::sqrt(std::max(0.0, 1.0 - 2.0 * lambda));
  q.norm_const = q.beta == 0.0 ? 1.0 : 2.0 * lambda / q.beta;
  return q;
}

double qsd_density(const QsdParams& q, double x) {
  if (x < 0.0) throw std::domain_error("qsd_density: x < 0");
  // M_lambda sinh(beta x) = (1 - beta^2) sinh(beta x) / beta.
  return (1.0 - q.beta * q.beta) * em_sinhc(q.beta, x);
}

double qsd_cdf(const QsdParams& q, double x) {
  if (x <= 0.0) return 0.0;
  return 1.0 - qsd_tail(q, x);
}

double qsd_mean(const QsdParams& q) { return 1.0 / q.lambda; }

AnalyticLaw qsd_law(const QsdParams& q) {
  AnalyticLaw law;
  law.name = q.is_minimal() ? "pi_min" : "pi_" + std::to_string(q.lambda);
  law.cdf = [q](double x) { return qsd_cdf(q, x); };
  law.integrated_cdf = [q](double x) {
    if (x <= 0.0) return 0.0;
    return x - qsd_mean(q) + qsd_tail_integral(q, x);
  };
  law.density = [q](double x) { return x < 0.0 ? 0.0 : qsd_density(q, x); };
  law.mean = qsd_mean(q);
  return law;
}

double qsd_draw(const QsdParams& q, Rng& rng) {
  if (q.is_minimal()) {
    return -std::log(rng.uniform_open() * rng.uniform_open());
  }
  const double rate = 1.0 - q.beta;
  if (q.beta >= 1.0 / 3.0) {
    // e^{-x} sinh(beta x) <= (1/2) e^{-(1 - beta) x}; acceptance 1 - e^{-2 beta x}.
    for (;;) {
      const double x = rng.exponential(rate);
      if (rng.uniform() < -std::expm1(-2.0 * q.beta * x)) return x;
    }
  }
  // e^{-x} sinh(beta x) <= beta x e^{-(1 - beta) x}; ratio (1 - e^{-2 beta x}) / (2 beta x).
  for (;;) {
    const double x = -std::log(rng.uniform_open() * rng.uniform_open()) / rate;
    const double bx = 2.0 * q.beta * x;
    if (rng.uniform() * bx < -std::expm1(-bx)) return x;
  }
}

std::vector<double> qsd_sample(const QsdParams& q, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("qsd_sample: n must be >= 1");
  std::vector<double> out(n);
  for (auto& x : out) x = qsd_draw(q, rng);
  return out;
}

double normal_log_cdf(double z) {
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
  if (z > -8.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // log Phi(z) = -z^2/2 - log(-z) - log(2 pi)/2 + log(sum_k (-1)^k (2k-1)!! / z^{2k}).
  const double z2 = z * z;
  double term = 1.0, series = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double next = -term * (2.0 * k - 1.0) / z2;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    series += term;
    if (std::abs(term) < 1e-17 * series) break;
  }
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

double log_survival_prob(const SurvivalQuery& s) {
  if (!(s.x0 > 0.0)) throw std::domain_error("survival_prob: x0 must be > 0");
  if (!(s.t >= 0.0)) throw std::domain_error("survival_prob: t must be >= 0");
  if (s.t == 0.0) return 0.0;
  const double rt = std::sqrt(s.t);
  const double la = normal_log_cdf((s.x0 - s.t) / rt);
  const double lb = 2.0 * s.x0 + normal_log_cdf(-(s.x0 + s.t) / rt);
  if (!(lb < la)) return -std::numeric_limits<double>::infinity();
  return la + std::log(-std::expm1(lb - la));
}

double survival_prob(const SurvivalQuery& s) {
  return std::exp(log_survival_prob(s));
}

double hitting_mgf(double x, double z) {
  if (!(x > 0.0)) throw std::domain_error("hitting_mgf: x must be > 0");
  if (z > 0.5) {
    throw std::domain_error("hitting_mgf: z > 1/2, exponential moment infinite");
  }
  return std::exp(-x * (std::sqrt(1.0 - 2.0 * z) - 1.0));
}

double green_g1(double x) {
  if (x < 0.0) throw std::domain_error("green_g1: x < 0");
  return x;
}

std::vector<double> green_apply(const std::function<double(double)>& f,
                                std::span<const double> x_grid) {
  if (x_grid.empty()) throw std::domain_error("green_apply: empty grid");
  if (!(x_grid.front() > 0.0)) {
    throw std::domain_error("green_apply: grid must be positive");
  }
  for (std::size_t i = 1; i < x_grid.size(); ++i) {
    if (!(x_grid[i] > x_grid[i - 1])) {
      throw std::domain_error("green_apply: grid must be strictly increasing");
    }
  }
  const auto source = [&f](double y) {
    const double v = f(y);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::domain_error("green_apply: f must be finite and non-negative");
    }
    return v;
  };
  using Rule = boost::math::quadrature::gauss<double, 10>;
  constexpr double kMaxPiece = 0.25;
  // Composite Gauss-Legendre over [a, b] with pieces no wider than kMaxPiece.
  auto composite = [](auto&& g, double a, double b) {
    if (b <= a) return 0.0;
    const auto pieces =
        static_cast<std::size_t>(std::ceil((b - a) / kMaxPiece));
    const double h = (b - a) / static_cast<double>(pieces);
    double s = 0.0;
    for (std::size_t k = 0; k < pieces; ++k) {
      s += Rule::integrate(g, a + k * h, a + (k + 1) * h);
    }
    return s;
  };

  const std::size_t n = x_grid.size();
  const double x_max = x_grid.back() + 20.0;

  std::vector<double> forward(n);
  double acc = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += composite(
        [&](double y) { return -std::expm1(-2.0 * y) * source(y); }, prev,
        x_grid[k]);
    forward[k] = acc;
    prev = x_grid[k];
  }

  std::vector<double> out(n);
  double next = x_max, backward = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double a = x_grid[k];
    backward = std::exp(-2.0 * (next - a)) * backward +
               composite(
                   [&](double y) { return std::exp(-2.0 * (y - a)) * source(y); },
                   a, next);
    out[k] = forward[k] - std::expm1(-2.0 * a) * backward;
    next = a;
  }
  return out;
}

double t_y_qsd(const QsdParams& q, double y) {
  if (y < 0.0) throw std::domain_error("t_y_qsd: y < 0");
  return y / q.lambda;
}

double t_y_pointmass(double x, double y) {
  if (!(x > 0.0)) throw std::domain_error("t_y_pointmass: x must be > 0");
  if (y < 0.0) throw std::domain_error("t_y_pointmass: y < 0");
  if (y == 0.0) return 0.0;
  auto excess = [&](double t) { return -log_survival_prob({x, t}) - y; };
  double lo = 0.0, hi = 1.0;
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double tail_rate(std::span<const double> samples, double fit_fraction) {
  if (samples.size() < 1000) {
    throw std::invalid_argument("tail_rate: need at least 1000 samples");
  }
  if (!(fit_fraction > 0.0) || fit_fraction > 0.5) {
    throw std::invalid_argument("tail_rate: fit_fraction must lie in (0, 0.5]");
  }
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  if (xs.front() == xs.back()) {
    throw std::invalid_argument("tail_rate: degenerate (all-equal) samples");
  }
  const std::size_t n = xs.size();
  const auto k = std::max<std::size_t>(
      2, static_cast<std::size_t>(fit_fraction * static_cast<double>(n)));
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    // j-th largest sample; empirical tail P(X >= x) = j / n.
    const double x = xs[n - j];
    const double y = std::log(static_cast<double>(j) / static_cast<double>(n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double kd = static_cast<double>(k);
  const double var = sxx - sx * sx / kd;
  if (!(var > 0.0)) {
    throw std::invalid_argument("tail_rate: degenerate fit window");
  }
  return (sxy - sx * sy / kd) / var;
}

}  // namespace fvselect
