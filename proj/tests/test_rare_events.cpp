#include "doctest.h"

#include <cmath>

#include "collab/errors.hpp"
#include "collab/rare_events.hpp"
#include "collab/theory.hpp"
#include "collab/ulam.hpp"

using namespace collab;

namespace {

CollisionScheme example_scheme(double delta, LatticeMode mode = LatticeMode::isolated_neighborhood) {
  auto p = example_scheme_params(delta);
  p.mode = mode;
  return CollisionScheme(PiecewiseExpandingMap::mod_beta(5), p);
}

}  // namespace

TEST_CASE("substreams are independent of worker count") {
  const auto s = example_scheme(0.05);
  const auto a = sample_hitting_times(s, 3000, 300, {InitKind::invariant, 50}, {9, 1});
  const auto b = sample_hitting_times(s, 3000, 300, {InitKind::invariant, 50}, {9, 4});
  CHECK(a.times == b.times);
  CHECK(a.censored == b.censored);
  const auto c = sample_hitting_times(s, 3000, 300, {InitKind::invariant, 50}, {10, 4});
  CHECK(a.times != c.times);
}

TEST_CASE("survival curve from hand-made hits") {
  HittingSample h;
  h.horizon = 3;
  h.times = {0, 1, 1, 3, 3};
  h.censored = {false, false, false, false, true};
  const auto c = survival_from_hits(h, 0);
  REQUIRE(c.fraction.size() == 4);
  CHECK(c.fraction[0] == doctest::Approx(0.8));
  CHECK(c.fraction[1] == doctest::Approx(0.4));
  CHECK(c.fraction[2] == doctest::Approx(0.4));
  CHECK(c.fraction[3] == doctest::Approx(0.2));
  CHECK(h.censored_count() == 1);
  CHECK(h.uncensored().size() == 4);
}

TEST_CASE("escape-rate fit on a geometric curve") {
  SurvivalCurve c;
  c.trajectories = 0;  // no survivor floor
  for (int n = 0; n <= 100; ++n) c.fraction.push_back(0.9 * std::pow(0.95, n));
  const auto f = fit_escape_rate(c, 10, 90);
  CHECK(f.rate == doctest::Approx(-std::log(0.95)).epsilon(1e-10));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_escape_rate(c, 50, 50), DomainError);
}

TEST_CASE("survival at time zero is one minus the hole mass") {
  const double delta = 0.05;
  const auto s = example_scheme(delta);
  const auto c = estimate_survival(s, 200000, 5, {3, 4});
  const double expected = 1.0 - 2.0 * delta * delta;
  CHECK(std::abs(c.fraction[0] - expected) < 4.0 * c.stderr_[0]);
  CHECK(c.batches.size() == 20);
  CHECK_THROWS_AS(estimate_survival(s, 10, 5, {3, 1}), SampleError);
}

TEST_CASE("Monte Carlo escape rate matches the box eigenvalue") {
  const double delta = 0.05;
  const auto s = example_scheme(delta);
  const auto c = estimate_survival(s, 200000, 600, {5, 0});
  const auto fit = fit_escape_rate(c, 20, 600);
  const BoxModel box = make_box(s, BoxShape::triple, 20, Dynamics::decoupled);
  const double spectral = leading_eigen(RealOperator(box, OperatorKind::open)).escape_rate;
  CHECK(std::abs(fit.rate - spectral) < 4.0 * fit.stderr_ + 1e-4);
}

TEST_CASE("disabled zones never hit") {
  const auto s = example_scheme(0.01, LatticeMode::disabled);
  const auto h = sample_hitting_times(s, 1000, 50, {InitKind::lebesgue, 0}, {1, 2});
  CHECK(h.censored_count() == 1000);
  const auto z = count_collisions(s, 5.0, 2e-4, 100, 10, {InitKind::lebesgue, 0}, {1, 2});
  for (long v : z.z) CHECK(v == 0);
  CHECK(z.singleton_fraction() == 1.0);
}

TEST_CASE("clusters") {
  CHECK(cluster_sizes({1, 2, 3, 20, 21, 50}, 10) == std::vector<long>{3, 2, 1});
  CHECK(cluster_sizes({}, 10).empty());
  CHECK(cluster_sizes({5, 16}, 10) == std::vector<long>{1, 1});
  CHECK(cluster_sizes({5, 15}, 10) == std::vector<long>{2});
}

TEST_CASE("characteristic functions") {
  const double s = 0.8, lam = 1.3, t = 2.0;
  const std::complex<double> expected =
      std::exp(lam * t * (std::complex<double>(std::cos(s), std::sin(s)) - 1.0));
  CHECK(std::abs(poisson_cf(s, lam, t) - expected) < 1e-14);
  CHECK(std::abs(poisson_cf(0.0, lam, t) - 1.0) < 1e-15);

  std::vector<long> z(10000, 0);
  for (std::size_t i = 0; i < z.size(); i += 2) z[i] = 1;
  const auto cf = empirical_cf(z, {0.0, 1.0}, 50, 3);
  CHECK(std::abs(cf[0].value - 1.0) < 1e-15);
  const std::complex<double> half = 0.5 + 0.5 * std::polar(1.0, 1.0);
  CHECK(std::abs(cf[1].value - half) < 1e-12);
  CHECK(cf[1].lower.real() <= cf[1].value.real());
  CHECK(cf[1].upper.real() >= cf[1].value.real());
  CHECK_THROWS_AS(empirical_cf(std::vector<long>(10, 0), {1.0}), SampleError);
}

TEST_CASE("counting: mean count grows linearly in t") {
  const auto s = example_scheme(0.02);
  const double mu = 2.0 * 0.02 * 0.02;
  const auto a = count_collisions(s, 2.0, mu, 4000, 10, {InitKind::invariant, 100}, {4, 0});
  const auto b = count_collisions(s, 4.0, mu, 4000, 10, {InitKind::invariant, 100}, {4, 0});
  CHECK(a.horizon == static_cast<long>(std::floor(2.0 / mu)));
  CHECK(b.mean_z() / a.mean_z() == doctest::Approx(2.0).epsilon(0.1));
  CHECK(a.singleton_fraction() > 0.95);
}

TEST_CASE("beta estimates against the one-step geometry") {
  // Starting uniformly in H for the worked example, one decoupled step
  // spreads both coordinates over 5 delta around their fixed centers, so the
  // orbit is back in H with probability 1/25.
  const auto s = example_scheme(0.01);
  const auto b0 = estimate_beta(s, 0, 0, 1, 40000, {8, 0});
  CHECK(std::abs(b0.value - 1.0 / 25.0) < 4.0 * b0.stderr_);
  CHECK_FALSE(b0.approximate);
  // After a return the pair swaps and leaves H.
  const auto b1 = estimate_beta(s, 1, 1, 1, 40000, {8, 0});
  CHECK(b1.value < 0.002);
  CHECK_THROWS_AS(estimate_beta(s, 1, 0, 3, 1000, {1, 1}), DomainError);
  CHECK_THROWS_AS(estimate_beta(s, 1, 0, 1, 100, {1, 1}), SampleError);
}

TEST_CASE("hole mass: direct over formula") {
  const auto s = example_scheme(0.01);
  const auto rows = mass_asymptotics_check(s, {0.02, 0.01}, DensitySource::ulam, 100, 0, 0, {1, 1});
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.formula == doctest::Approx(2.0 * r.delta * r.delta).epsilon(1e-9));
    CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("index negligibility in the isolated neighbourhood") {
  // One decoupled step from H: no swap can move the neighbour, the focal
  // coordinate stays near its center, and a return (probability 1/25) is in
  // the starting channel.
  const auto s = example_scheme(0.02);
  const std::size_t n = 20000;
  const auto r = index_negligibility(s, 1, n, {2, 0});
  CHECK(r.moved == 0);
  const double p = 1.0 / 25.0;
  CHECK(std::abs(static_cast<double>(r.returns) - p * n) < 4.0 * std::sqrt(n * p * (1 - p)));
}
