#include "doctest.h"

#include <cmath>
#include <random>

#include "collab/errors.hpp"
#include "collab/interval_map.hpp"

using namespace collab;

namespace {

// tau(x) = 3x on [0,1/3), (3x - 1)/2 on [1/3,1): branch slopes 3 and 3/2, so
// sum 1/|tau'| over preimages is 1/3 + 2/3 and Lebesgue is invariant.
PiecewiseExpandingMap uneven_map() {
  return PiecewiseExpandingMap::affine_branches({Rational(0), Rational(1, 3), Rational(1)},
                                                {Rational(3), Rational(3, 2)},
                                                {Rational(0), Rational(-1, 2)});
}

}  // namespace

TEST_CASE("eval_map on beta x mod 1") {
  const auto five = PiecewiseExpandingMap::mod_beta(5);
  CHECK(eval_map(five, 0.3) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eval_map(five, Rational(3, 10)) == Rational(1, 2));
  CHECK(eval_map(five, Rational(1, 4)) == Rational(1, 4));
  CHECK(five.uniform_beta() == 5);
  CHECK(five.expansion_factor() == 5.0);
  CHECK(five.branch_count() == 5);
}

TEST_CASE("float and exact evaluation agree") {
  const auto map = uneven_map();
  std::mt19937_64 gen(7);
  for (int i = 0; i < 1000; ++i) {
    const long long num = static_cast<long long>(gen() % 999983);
    const Rational x(num, 999983);
    const double fx = eval_map(map, to_double(x));
    const Rational ex = eval_map(map, x);
    CHECK(fx >= 0.0);
    CHECK(fx < 1.0);
    CHECK(std::abs(fx - to_double(ex)) < 1e-12);
  }
}

TEST_CASE("derivatives") {
  const auto map = uneven_map();
  CHECK(deriv_map(map, 0.1) == 3.0);
  CHECK(deriv_map(map, 0.5) == 1.5);
  CHECK_THROWS_AS(deriv_map(map, 1.0 / 3.0 + 0.0), SingularityError);
  CHECK(map.expansion_factor() == 1.5);
  // orbit of 1/9: 1/9 -> 1/3 -> 1/4 -> 3/4; slopes 3, 3/2, 3
  CHECK(deriv_iterate(map, Rational(1, 9), 3) == Rational(27, 2));
  CHECK(deriv_iterate(PiecewiseExpandingMap::mod_beta(5), Rational(1, 7), 4) == Rational(625));
}

TEST_CASE("domain errors") {
  const auto two = PiecewiseExpandingMap::mod_beta(2);
  CHECK_THROWS_AS(eval_map(two, 1.0), DomainError);
  CHECK_THROWS_AS(eval_map(two, -0.1), DomainError);
  CHECK_THROWS_AS(PiecewiseExpandingMap::sine_perturbed(2, 0.6), SpecificationError);
  CHECK_THROWS_AS(PiecewiseExpandingMap::mod_beta(1), SpecificationError);
  // slope 1 is not expanding
  CHECK_THROWS(PiecewiseExpandingMap::affine_branches({Rational(0), Rational(1)}, {Rational(1)},
                                                      {Rational(0)}));
  CHECK_THROWS_AS(eval_map(PiecewiseExpandingMap::sine_perturbed(3, 0.2), Rational(1, 2)),
                  NonRationalError);
}

TEST_CASE("Ulam matrix of 2x mod 1 on four cells") {
  const auto P = ulam_matrix_1d(PiecewiseExpandingMap::mod_beta(2), {0.0, 0.25, 0.5, 0.75, 1.0});
  const Eigen::MatrixXd D(P);
  Eigen::MatrixXd expected(4, 4);
  expected << 0.5, 0.5, 0, 0,  //
      0, 0, 0.5, 0.5,          //
      0.5, 0.5, 0, 0,          //
      0, 0, 0.5, 0.5;
  CHECK((D - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Ulam rows are stochastic for affine and sampled branches") {
  for (const auto& map : {uneven_map(), PiecewiseExpandingMap::sine_perturbed(3, 0.3),
                          PiecewiseExpandingMap::mod_beta(7)}) {
    std::vector<double> edges;
    for (int i = 0; i <= 37; ++i) edges.push_back(i / 37.0);
    const Eigen::MatrixXd D(ulam_matrix_1d(map, edges, 2000));
    CHECK((D.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(D.minCoeff() >= 0.0);
  }
}

TEST_CASE("invariant densities") {
  for (std::size_t n : {16u, 100u}) {
    const auto inv = invariant_density(PiecewiseExpandingMap::mod_beta(3), n);
    for (double v : inv.density.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(inv.eigenvalue == doctest::Approx(1.0));
  }
  const auto un = invariant_density(uneven_map(), 60);
  for (double v : un.density.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  // The sine perturbation piles mass where the map is flattest; the density is
  // non-constant but still integrates to one.
  const auto sp = invariant_density(PiecewiseExpandingMap::sine_perturbed(3, 0.4), 120);
  CHECK(sp.density.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
  double lo = 1e9, hi = 0;
  for (double v : sp.density.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo > 0.0);
  CHECK(hi - lo > 0.05);
  CHECK_THROWS_AS(invariant_density(PiecewiseExpandingMap::mod_beta(2), 8), DomainError);
}

TEST_CASE("density limits and distances") {
  DensityEstimate d;
  d.edges = {0.0, 0.5, 1.0};
  d.values = {0.5, 1.5};
  CHECK(d.right_limit(0.5) == 1.5);
  CHECK(d.left_limit(0.5) == 0.5);
  CHECK(d.left_limit(0.25) == 0.5);
  CHECK(d.total_mass() == doctest::Approx(1.0));
  const auto u = DensityEstimate::uniform_grid(3);
  CHECK(d.l1_distance(u) == doctest::Approx(0.5));
  CHECK(u.l1_distance(d) == doctest::Approx(0.5));
}
