#include "collab/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/special_functions/gamma.hpp>

#include "collab/errors.hpp"

namespace collab {

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;  // series is 1 to double precision here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_exponential(std::vector<double> sample, KsScaling scaling, double rate) {
  if (sample.size() < 100) throw SampleError("KS test needs at least 100 uncensored samples");
  KsResult r;
  r.n = sample.size();
  if (scaling == KsScaling::empirical_mean) {
    double mean = 0.0;
    for (double t : sample) mean += t;
    mean /= static_cast<double>(sample.size());
    if (!(mean > 0.0)) {
      r.scale = 1.0;
    } else {
      r.scale = 1.0 / mean;
    }
  } else {
    if (!(rate > 0.0)) throw DomainError("explicit KS rate must be positive");
    r.scale = rate;
  }
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = 1.0 - std::exp(-sample[i] * r.scale);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  r.statistic = d;
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

double chi_square_uniform_pvalue(const std::vector<std::size_t>& counts) {
  if (counts.size() < 2) throw DomainError("chi-square needs at least two cells");
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (!(total > 0)) throw SampleError("chi-square on an empty sample");
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) {
    const double diff = static_cast<double>(c) - expected;
    stat += diff * diff / expected;
  }
  const double dof = static_cast<double>(counts.size() - 1);
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

double poisson_tv_distance(const std::vector<long>& values, double mean) {
  if (values.empty()) throw SampleError("TV distance of an empty sample");
  std::map<long, double> empirical;
  for (long v : values) empirical[v] += 1.0;
  const double n = static_cast<double>(values.size());
  long kmax = empirical.rbegin()->first;
  kmax = std::max<long>(kmax, static_cast<long>(mean + 20.0 * std::sqrt(mean + 1.0) + 20.0));
  double tv = 0.0;
  double log_pmf = -mean;  // log P(0)
  for (long k = 0; k <= kmax; ++k) {
    if (k > 0) log_pmf += std::log(mean) - std::log(static_cast<double>(k));
    const double p = mean > 0 ? std::exp(log_pmf) : (k == 0 ? 1.0 : 0.0);
    auto it = empirical.find(k);
    const double q = it == empirical.end() ? 0.0 : it->second / n;
    tv += std::abs(p - q);
  }
  return 0.5 * tv;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("least squares needs two or more points");
  const double m = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace collab
