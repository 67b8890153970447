#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "collab/errors.hpp"
#include "collab/theory.hpp"
#include "collab/ulam.hpp"

using namespace collab;

namespace {

// Largest real eigenvalue of a small dense matrix, via a dense solver.
double dense_leading(const Eigen::MatrixXd& A) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  double best = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    best = std::max(best, std::abs(es.eigenvalues()[i]));
  return best;
}

CollisionScheme example_scheme(double delta) {
  return CollisionScheme(PiecewiseExpandingMap::mod_beta(5), example_scheme_params(delta));
}

}  // namespace

TEST_CASE("doubling map with hole [0,1/4)") {
  // 4-cell Markov matrix with the hole row removed.
  Eigen::MatrixXd A(4, 4);
  A << 0, 0, 0, 0,  //
      0, 0, 0.5, 0.5, //
      0.5, 0.5, 0, 0, //
      0, 0, 0.5, 0.5;
  const double oracle = dense_leading(A);
  CHECK(oracle == doctest::Approx((1.0 + std::sqrt(5.0)) / 4.0).epsilon(1e-12));
  const auto two = PiecewiseExpandingMap::mod_beta(2);
  for (std::size_t n : {4u, 64u, 256u}) {
    const auto r = interval_eigen(two, Grid1D::uniform(n), 0.0, 0.25);
    CHECK(std::abs(r.modulus - oracle) < 1e-9);
    CHECK(r.escape_rate == doctest::Approx(-std::log(oracle)));
  }
}

TEST_CASE("closed 1D operator has eigenvalue one") {
  for (const auto& map : {PiecewiseExpandingMap::mod_beta(3),
                          PiecewiseExpandingMap::sine_perturbed(3, 0.3)}) {
    CHECK(interval_eigen(map, Grid1D::uniform(64)).modulus == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("hole at a fixed point: escape rate over hole mass tends to 1/2") {
  // For 2x mod 1 and a hole [0, eta) at the fixed point 0 the extremal index
  // is 1 - 1/tau'(0) = 1/2.
  const auto two = PiecewiseExpandingMap::mod_beta(2);
  const double eta = std::ldexp(1.0, -8);
  const auto r = interval_eigen(two, Grid1D::uniform(1u << 12), 0.0, eta);
  CHECK((1.0 - r.modulus) / eta == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("Markov refinement") {
  const auto five = PiecewiseExpandingMap::mod_beta(5);
  const auto g = Grid1D::markov_refined(five, 20, {Rational(1, 2), Rational(49, 100)});
  CHECK(g.markov);
  const auto has = [&](const Rational& q) {
    return std::find(g.exact_edges.begin(), g.exact_edges.end(), q) != g.exact_edges.end();
  };
  CHECK(has(Rational(49, 100)));
  // 49/100 -> 45/100 -> 25/100 -> 25/100 closes
  CHECK(has(Rational(9, 20)));
  CHECK(g.edges.front() == 0.0);
  CHECK(g.edges.back() == 1.0);
  CHECK(std::is_sorted(g.edges.begin(), g.edges.end()));
  CHECK_THROWS_AS(Grid1D::markov_refined(five, 20, {Rational(1, 7919)}, 64), ResolutionError);
}

TEST_CASE("box operators: row sums and sparse form agree") {
  const auto scheme = example_scheme(0.02);
  const BoxModel box = make_box(scheme, BoxShape::triple, 10, Dynamics::decoupled);
  CHECK(box.axes() == 3);
  CHECK(box.channels.size() == 2);
  const Eigen::ArrayXd h = box.hole_fraction();

  const RealOperator closed(box, OperatorKind::closed), open(box, OperatorKind::open);
  CHECK((closed.row_sums().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((open.row_sums().array() - (1.0 - h)).abs().maxCoeff() < 1e-12);

  const double s = 0.7;
  const ComplexOperator tw(box, OperatorKind::twisted, s);
  const Eigen::ArrayXcd expected = 1.0 - h.cast<std::complex<double>>() +
                                   std::polar(1.0, s) * h.cast<std::complex<double>>();
  CHECK((tw.row_sums().array() - expected).abs().maxCoeff() < 1e-12);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u;
  Eigen::VectorXd v(open.dimension());
  for (auto& x : v) x = u(gen);
  Eigen::VectorXd a;
  open.apply(v, a);
  const auto M = open.to_sparse();
  const Eigen::VectorXd b = (v.transpose() * M).transpose();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("box eigenvalues") {
  const auto scheme = example_scheme(0.02);
  const BoxModel box = make_box(scheme, BoxShape::triple, 20, Dynamics::decoupled);
  const auto closed = leading_eigen(RealOperator(box, OperatorKind::closed));
  CHECK(closed.modulus == doctest::Approx(1.0).epsilon(1e-10));
  const auto open = leading_eigen(RealOperator(box, OperatorKind::open));
  // 1 - lambda is theta * mu(H) to leading order, with mu(H) = 2 delta^2.
  const double ratio = (1.0 - open.modulus) / (2.0 * 0.02 * 0.02);
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.0);
  const auto tw0 = leading_eigen(ComplexOperator(box, OperatorKind::twisted, 0.0));
  CHECK(std::abs(tw0.lambda - std::complex<double>(1.0)) < 1e-10);
}

TEST_CASE("full_lattice schemes have no box") {
  auto p = example_scheme_params(0.01);
  p.mode = LatticeMode::full_lattice;
  const CollisionScheme s(PiecewiseExpandingMap::mod_beta(5), p);
  CHECK_THROWS_AS(make_box(s, BoxShape::pair, 10, Dynamics::decoupled), ModeError);
}

TEST_CASE("operator gap: Delta_delta = 2 delta^2") {
  const auto scheme = example_scheme(0.02);
  const std::vector<double> deltas{0.02, 0.01, 0.005};
  const auto g = operator_gap_diagnostics(scheme, BoxShape::triple, 20, deltas);
  REQUIRE(g.rows.size() == 3);
  for (const auto& r : g.rows) CHECK(r.mass_difference == doctest::Approx(2 * r.delta * r.delta).epsilon(1e-9));
  CHECK(g.mass_slope == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(g.tv_slope >= 1.0);
}

TEST_CASE("loglog slope") {
  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
  CHECK(with_delta(example_scheme(0.02), 0.005).delta() == 0.005);
}
