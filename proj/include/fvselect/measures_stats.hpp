#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fvselect/random.hpp"

namespace fvselect {

/// Where the atoms of an empirical measure are allowed to live.
enum class Support { positive, non_negative, real };

/// Weighted point set with sorted atoms and weights summing to one.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;

  /// Equal weights. Throws std::invalid_argument on an empty input or on
  /// atoms outside `support`.
  explicit EmpiricalMeasure(std::vector<double> points,
                            Support support = Support::positive);

  /// Explicit non-negative weights; they are normalised to sum to one.
  EmpiricalMeasure(std::vector<double> points, std::vector<double> weights,
                   Support support = Support::positive);

  static EmpiricalMeasure point_mass(double x,
                                     Support support = Support::positive) {
    return EmpiricalMeasure({x}, support);
  }

  std::span<const double> points() const { return points_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  double mean() const;
  /// Integral of f against the measure.
  double integrate(const std::function<double(double)>& f) const;
  /// Right-continuous CDF.
  double cdf(double x) const;
  /// Generalised inverse of the CDF, u in (0, 1].
  double quantile(double u) const;

 private:
  std::vector<double> points_;
  std::vector<double> weights_;
};

/// Analytic law on the half-line, described by its CDF.
///
/// `integrated_cdf(x)` is the primitive of the CDF from 0 to x. When it is
/// absent, distances fall back to adaptive quadrature of the CDF. `mean` is
/// NaN when unknown.
struct AnalyticLaw {
  std::string name;
  std::function<double(double)> cdf;
  std::function<double(double)> integrated_cdf;
  std::function<double(double)> density;
  double mean = std::numeric_limits<double>::quiet_NaN();
};

/// Exponential law with the given rate.
AnalyticLaw exponential_law(double rate);

/// Wasserstein-1 distance on the real line, i.e. the L1 distance of CDFs.
double w1(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double w1(const EmpiricalMeasure& a, const AnalyticLaw& b);
double w1(const AnalyticLaw& a, const AnalyticLaw& b);

/// Kolmogorov-Smirnov distance (sup-norm of CDF difference).
double ks(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double ks(const EmpiricalMeasure& a, const AnalyticLaw& b);

/// Wasserstein-1 distance for the bounded metric min(1, |x - y|).
///
/// Solved exactly through the dual: maximise sum_k f_k (a_k - b_k) over
/// 1-Lipschitz f with values in [0, 1]. Cost is quadratic in the number of
/// distinct atoms, so intended for small and moderate measures.
double w1_truncated(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

struct EstimatorResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double n_effective = 0.0;
};

/// Two-sided normal-approximation interval around `estimate`.
EstimatorResult make_estimate(double estimate, double std_error,
                              double n_effective, double z = 1.959963984540054);

/// Batch-means estimator of the stationary mean of a time series.
///
/// The series is cut into `n_batches` contiguous batches of equal length; a
/// leading remainder that does not fill a batch is dropped. The interval uses
/// the Student t quantile with n_batches - 1 degrees of freedom.
EstimatorResult batch_means(std::span<const double> series,
                            std::size_t n_batches = 20);

/// Nonparametric bootstrap of a statistic of an i.i.d. sample.
EstimatorResult bootstrap(
    std::span<const double> sample,
    const std::function<double(std::span<const double>)>& statistic,
    std::size_t n_resamples, Rng& rng);

double sample_mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);

}  // namespace fvselect
