#include "doctest.h"

#include <cmath>

#include "collab/errors.hpp"
#include "collab/theory.hpp"

using namespace collab;

namespace {

CollisionScheme example_scheme(double delta = 0.01) {
  return CollisionScheme(PiecewiseExpandingMap::mod_beta(5), example_scheme_params(delta));
}

// Direct oracle for the worked example: both centers are fixed points of 5x,
// each channel returns at every lag, and the first return after lag 0 is at
// k = 1 with weight |(tau^2)'|^{-2} = 5^{-4}.
const Rational example_theta = Rational(624, 625);

}  // namespace

TEST_CASE("exact orbits") {
  const auto two = PiecewiseExpandingMap::mod_beta(2);
  const auto o = exact_orbit(two, Rational(1, 3), 5);
  REQUIRE(o.size() == 6);
  for (int j = 0; j <= 5; ++j) CHECK(o[j] == (j % 2 == 0 ? Rational(1, 3) : Rational(2, 3)));
  const auto f = exact_orbit(PiecewiseExpandingMap::mod_beta(5), Rational(1, 4), 3);
  for (const auto& x : f) CHECK(x == Rational(1, 4));
  CHECK_THROWS(exact_orbit(two, Rational(1, 3), 20000));
}

TEST_CASE("recurrence of the worked example") {
  const auto s = example_scheme();
  const auto rec = detect_recurrence(s, 50);
  CHECK(rec.exact);
  CHECK(rec.periodic);
  CHECK(rec.s_rec == std::vector<int>{0, 1});
  CHECK(rec.s_tilde_rec.empty());
  REQUIRE_FALSE(rec.k_terms.empty());
  for (const auto& t : rec.k_terms) {
    CHECK(t.v == t.v_prime);  // the two centers never trade places
    CHECK(t.target_reachable);
  }
}

TEST_CASE("no recurrence for non-returning centers") {
  // Under 2x mod 1, 1/4 -> 1/2 -> 0 and 3/8 -> 3/4 -> 1/2 -> 0: neither pair
  // ever returns to the zone centers.
  SchemeParams p = example_scheme_params(0.01);
  p.centers = {0.25, 0.375};
  p.epsilon = 0.05;
  const CollisionScheme s(PiecewiseExpandingMap::mod_beta(2), p);
  const auto rec = detect_recurrence(s, 100);
  CHECK(rec.s_rec.empty());
  CHECK(rec.k_terms.empty());
  const auto th = theta_value(s, rec, idealized_densities(s));
  CHECK(th.theta == 1.0);
  REQUIRE(th.exact);
  CHECK(*th.exact == Rational(1));
}

TEST_CASE("theta of the worked example is exact") {
  const auto s = example_scheme();
  const auto rec = detect_recurrence(s);
  const auto th = theta_value(s, rec, idealized_densities(s));
  REQUIRE(th.exact);
  CHECK(*th.exact == example_theta);
  CHECK(th.theta == doctest::Approx(0.9984).epsilon(1e-15));
  REQUIRE(th.exact_k0);
  CHECK(*th.exact_k0 == Rational(1) - Rational(1, 25) - Rational(1, 625));
  REQUIRE(th.exact_first_return);
  CHECK(*th.exact_first_return == Rational(24, 25));
  CHECK(th.tail_bound < 1e-100);
}

TEST_CASE("q_k of the first return") {
  const auto s = example_scheme();
  const auto rec = detect_recurrence(s, 10);
  const auto dens = idealized_densities(s);
  for (const auto& t : rec.k_terms) {
    const auto q = q_k_value(s, t, dens);
    REQUIRE(q.exact);
    // 1/(|D^{k+1}(a_v)| |D^{k+1}(a_{-v})|) per channel over the normalizer 2;
    // from k = 2 on the lag-1 return is excluded
    const Rational expected = t.k == 0 ? Rational(1, 50) : t.k == 1 ? Rational(1, 1250) : Rational(0);
    CHECK(*q.exact == expected);
  }
}

TEST_CASE("theta_from_q") {
  CHECK(*theta_from_q({{1.0 / 25, Rational(1, 25)}}).exact == Rational(24, 25));
  const auto mixed = theta_from_q({{0.25, Rational(1, 4)}, {0.1, std::nullopt}});
  CHECK_FALSE(mixed.exact);
  CHECK(mixed.value == doctest::Approx(0.65));
}

TEST_CASE("closed-form betas and the counting limit") {
  const auto s = example_scheme();
  const auto rec = detect_recurrence(s, 20);
  const auto dens = idealized_densities(s);
  const auto th = theta_value(s, rec, dens);
  const auto betas = closed_form_betas(s, rec, dens);
  const auto pts = theta_tilde_value(rec, betas, th.theta, {0.0, 0.5, 1.0, 2.0});
  REQUIRE(pts.size() == 4);
  for (const auto& p : pts) {
    CHECK(std::abs(p.theta_tilde - std::complex<double>(th.theta)) < 1e-12);
    CHECK(std::abs(p.phi_x - std::polar(1.0, p.s)) < 1e-12);
  }
}

TEST_CASE("beta sums above one are rejected") {
  const auto s = example_scheme();
  const auto rec = detect_recurrence(s, 5);
  BetaTable bad;
  bad.entries[{-1, -1, 1}] = {{0.7, 0.0}, {0.6, 0.0}};
  CHECK_THROWS_AS(theta_tilde_value(rec, bad, 0.9, {1.0}), DomainError);
}

TEST_CASE("example report passes every assertion") {
  const auto rep = example_report(true, 20);
  CHECK(rep.passed());
  for (const auto& a : rep.assertions) CHECK_MESSAGE(a.pass, a.name << ": " << a.detail);
  REQUIRE(rep.spectral.size() == 3);
  // The spectral ratio sits near the first-return value 24/25 and drifts
  // towards it as delta shrinks.
  for (const auto& sp : rep.spectral) {
    CHECK(sp.mu_hole == doctest::Approx(2 * sp.delta * sp.delta));
    CHECK(std::abs(sp.theta_spec - 0.96) < 0.005);
  }
  CHECK(std::abs(rep.spectral[2].theta_spec - 0.96) < std::abs(rep.spectral[0].theta_spec - 0.96));
}

TEST_CASE("estimated densities approach the idealized ones") {
  const auto s = example_scheme(0.02);
  const auto rec = detect_recurrence(s, 10);
  const auto est = estimated_densities(s, 20);
  const auto ide = idealized_densities(s);
  const auto a = theta_value(s, rec, est, 10);
  const auto b = theta_value(s, rec, ide, 10);
  CHECK(a.theta == doctest::Approx(b.theta).epsilon(1e-3));
}
