#pragma once

#include <cstddef>
#include <vector>

namespace collab {

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_sf(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
  double scale = 0.0;  // multiplier applied to the sample before comparing with Exp(1)
  std::size_t n = 0;
};

enum class KsScaling { empirical_mean, explicit_rate };

/// sup |F_n(t * scale) - (1 - e^{-t})|. With empirical_mean the scale is
/// 1 / mean (the p-value is then conservative); with explicit_rate it is `rate`.
/// Needs at least 100 samples.
KsResult ks_exponential(std::vector<double> sample, KsScaling scaling, double rate = 1.0);

/// Pearson chi-square test of equal cell probabilities; returns the p-value.
double chi_square_uniform_pvalue(const std::vector<std::size_t>& counts);

/// Total-variation distance between the empirical law of `values` and
/// Poisson(mean).
double poisson_tv_distance(const std::vector<long>& values, double mean);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace collab
