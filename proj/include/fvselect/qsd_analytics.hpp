#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fvselect/measures_stats.hpp"
#include "fvselect/random.hpp"

// Closed-form quantities for Brownian motion with drift -1 killed at 0:
// the quasi-stationary family, survival and hitting-time laws, the Green
// kernel, and log-survival times T_y.

namespace fvselect {

/// Largest QSD eigenvalue, attained by the minimal QSD x e^{-x} dx.
inline constexpr double kLambdaMin = 0.5;

/// Member of the QSD family, density M e^{-x} sinh(beta x) (or x e^{-x} when
/// beta = 0) with beta = sqrt(1 - 2 lambda).
struct QsdParams {
  double lambda = kLambdaMin;
  double beta = 0.0;
  double norm_const = 1.0;

  bool is_minimal() const { return beta == 0.0; }
};

/// Throws std::domain_error unless 0 < lambda <= 1/2.
QsdParams make_qsd(double lambda);
inline QsdParams minimal_qsd() { return make_qsd(kLambdaMin); }

double qsd_density(const QsdParams& q, double x);
double qsd_cdf(const QsdParams& q, double x);
/// Mean of the QSD; equals 1 / lambda.
double qsd_mean(const QsdParams& q);
/// CDF, integrated CDF, density and mean bundled for distance computations.
AnalyticLaw qsd_law(const QsdParams& q);

/// One exact draw. Minimal case: Gamma(2, 1). Otherwise rejection from an
/// exponential (beta >= 1/3) or Gamma(2, 1 - beta) envelope (beta < 1/3).
double qsd_draw(const QsdParams& q, Rng& rng);
std::vector<double> qsd_sample(const QsdParams& q, std::size_t n, Rng& rng);

struct SurvivalQuery {
  double x0 = 1.0;
  double t = 0.0;
};

/// log Phi(z) for the standard normal CDF; asymptotic series below -8.
double normal_log_cdf(double z);

/// P_x(tau > t) from the inverse-Gaussian first-passage law, evaluated in
/// log space so large x does not overflow e^{2x}.
double survival_prob(const SurvivalQuery& s);
inline double survival_prob(double x0, double t) {
  return survival_prob(SurvivalQuery{x0, t});
}
double log_survival_prob(const SurvivalQuery& s);

/// E_x[exp(z tau)] = exp(-x (sqrt(1 - 2z) - 1)), finite for z <= 1/2.
double hitting_mgf(double x, double z);

/// E_x[tau] = x.
double green_g1(double x);

/// Gf(x) = E_x[ int_0^tau f(X_s) ds ] on a strictly increasing positive grid.
///
/// Solves (1/2) u'' - u' = -f with u(0) = 0 by variation of parameters, keeping
/// the solution whose derivative stays bounded at X_max = max(grid) + 20:
///   u(x) = int_0^x (1 - e^{-2y}) f(y) dy
///        + (1 - e^{-2x}) int_x^{X_max} e^{-2(y - x)} f(y) dy.
std::vector<double> green_apply(const std::function<double(double)>& f,
                                std::span<const double> x_grid);

/// T_y of a QSD: survival is exactly e^{-lambda t}, so T_y = y / lambda.
double t_y_qsd(const QsdParams& q, double y);

/// T_y of a point mass at x: root of -ln P_x(tau > t) = y by bisection to an
/// absolute tolerance of 1e-8.
double t_y_pointmass(double x, double y);

/// Least-squares slope of ln(empirical tail) against x over the top
/// `fit_fraction` order statistics.
double tail_rate(std::span<const double> samples, double fit_fraction = 0.05);

}  // namespace fvselect
