#include "doctest.h"

#include <cmath>
#include <random>

#include "collab/errors.hpp"
#include "collab/statistics.hpp"

using namespace collab;

TEST_CASE("Kolmogorov survival function") {
  // Reference values of the limiting distribution.
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-12));
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-10));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(10.0) < 1e-80);
}

TEST_CASE("KS distance of the exponential quantile sample is 1/(2n)") {
  const std::size_t n = 1000;
  std::vector<double> sample;
  for (std::size_t i = 1; i <= n; ++i) sample.push_back(-std::log(1.0 - (i - 0.5) / n));
  const auto r = ks_exponential(sample, KsScaling::explicit_rate, 1.0);
  CHECK(r.statistic == doctest::Approx(0.5 / n).epsilon(1e-9));
  CHECK(r.n == n);
  CHECK(r.p_value > 0.99);

  // scaling by a rate: the sample 2t is Exp(1/2)
  for (auto& t : sample) t *= 2.0;
  CHECK(ks_exponential(sample, KsScaling::explicit_rate, 0.5).statistic ==
        doctest::Approx(0.5 / n).epsilon(1e-9));
  CHECK(ks_exponential(sample, KsScaling::empirical_mean).statistic < 0.002);
}

TEST_CASE("KS rejects non-exponential samples") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> sample(5000);
  for (auto& x : sample) x = u(gen);
  const auto r = ks_exponential(sample, KsScaling::empirical_mean);
  CHECK(r.statistic > 0.05);
  CHECK(r.p_value < 1e-6);
  CHECK_THROWS(ks_exponential(std::vector<double>(10, 1.0), KsScaling::empirical_mean));
}

TEST_CASE("chi-square uniformity") {
  CHECK(chi_square_uniform_pvalue({100, 100, 100, 100}) == doctest::Approx(1.0));
  CHECK(chi_square_uniform_pvalue({400, 0, 0, 0}) < 1e-10);
  // statistic 4 on 1 dof: p = erfc(sqrt(2))
  CHECK(chi_square_uniform_pvalue({60, 40}) == doctest::Approx(std::erfc(std::sqrt(2.0))).epsilon(1e-9));
}

TEST_CASE("Poisson total variation") {
  CHECK(poisson_tv_distance({0, 0, 0}, 0.0) == doctest::Approx(0.0));
  const double p0 = std::exp(-0.5), p1 = 0.5 * p0;
  const double expected = 0.5 * (std::abs(0.5 - p0) + std::abs(0.5 - p1) + (1.0 - p0 - p1));
  CHECK(poisson_tv_distance({0, 1, 0, 1}, 0.5) == doctest::Approx(expected).epsilon(1e-12));

  std::mt19937_64 gen(11);
  std::poisson_distribution<long> pois(2.0);
  std::vector<long> z(200000);
  for (auto& v : z) v = pois(gen);
  CHECK(poisson_tv_distance(z, 2.0) < 0.01);
}

TEST_CASE("least squares recovers a line") {
  const auto f = least_squares({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}
