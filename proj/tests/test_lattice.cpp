#include "doctest.h"

#include <algorithm>
#include <random>

#include "collab/errors.hpp"
#include "collab/lattice.hpp"
#include "collab/theory.hpp"

using namespace collab;

namespace {

CollisionScheme scheme_1d(LatticeMode mode, double delta = 0.01) {
  auto p = example_scheme_params(delta);
  p.mode = mode;
  return CollisionScheme(PiecewiseExpandingMap::mod_beta(5), p);
}

CollisionScheme scheme_2d(LatticeMode mode) {
  SchemeParams p;
  p.dimension = 2;
  p.side = 5;
  p.centers = {0.5, 0.3, 0.7, 0.1};
  p.epsilon = 0.1;
  p.delta = 0.05;
  p.mode = mode;
  return CollisionScheme(PiecewiseExpandingMap::mod_beta(5), p);
}

LatticeState random_state(const CollisionScheme& s, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::ArrayXd x(s.site_count());
  for (auto& v : x) v = u(gen);
  return LatticeState(s, x);
}

// A random state that sits in some zone pair often enough to exercise swaps.
LatticeState zone_heavy_state(const CollisionScheme& s, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dir(0, s.direction_count() - 1);
  Eigen::ArrayXd x(s.site_count());
  for (auto& v : x) {
    if (u(gen) < 0.6) {
      const int w = dir(gen);
      v = s.zone_lo(w, false) + u(gen) * (s.zone_hi(w, false) - s.zone_lo(w, false));
    } else {
      v = u(gen);
    }
  }
  return LatticeState(s, x);
}

std::vector<double> sorted(const Eigen::ArrayXd& x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("scheme construction and labels") {
  const auto s = scheme_2d(LatticeMode::full_lattice);
  CHECK(s.site_count() == 25);
  CHECK(s.direction_count() == 4);
  CHECK(CollisionScheme::label(0) == "+1");
  CHECK(CollisionScheme::label(3) == "-2");
  CHECK(CollisionScheme::parse_label("-2", 2) == 3);
  CHECK_THROWS_AS(CollisionScheme::parse_label("+3", 2), SpecificationError);
  CHECK_THROWS_AS(CollisionScheme::parse_label("x1", 2), SpecificationError);
  CHECK(CollisionScheme::opposite(2) == 3);
  // wrap-around on the torus
  const int origin = s.site_index({0, 0});
  CHECK(s.coordinates(s.neighbor(origin, 1)) == std::vector<int>{4, 0});
  CHECK(s.coordinates(s.neighbor(origin, 2)) == std::vector<int>{0, 1});
  CHECK(s.hole_lebesgue_measure() == doctest::Approx(4 * 0.05 * 0.05));
  CHECK(scheme_1d(LatticeMode::disabled).hole_lebesgue_measure() == 0.0);
  CHECK(scheme_1d(LatticeMode::isolated_neighborhood).exact());
}

TEST_CASE("invalid schemes") {
  auto p = example_scheme_params(0.01);
  auto bad = p;
  bad.centers = {0.4, 0.25};  // 2/5 is a branch endpoint of 5x
  CHECK_THROWS_AS(CollisionScheme(PiecewiseExpandingMap::mod_beta(5), bad), SpecificationError);
  bad = p;
  bad.delta = 0.2;  // delta > epsilon
  CHECK_THROWS_AS(CollisionScheme(PiecewiseExpandingMap::mod_beta(5), bad), SpecificationError);
  bad = p;
  bad.centers = {0.5, 0.52};  // overlapping zones
  CHECK_THROWS_AS(CollisionScheme(PiecewiseExpandingMap::mod_beta(5), bad), SpecificationError);
  bad = p;
  bad.centers = {0.5, 0.03};  // zone leaves (0,1)
  CHECK_THROWS_AS(CollisionScheme(PiecewiseExpandingMap::mod_beta(5), bad), SpecificationError);
  bad = p;
  bad.side = 2;
  CHECK_THROWS_AS(CollisionScheme(PiecewiseExpandingMap::mod_beta(5), bad), SpecificationError);
  const auto s = scheme_1d(LatticeMode::full_lattice);
  CHECK_THROWS_AS(LatticeState(s, Eigen::ArrayXd::Constant(9, 1.0)), DomainError);
  CHECK_THROWS_AS(LatticeState(s, Eigen::ArrayXd::Constant(4, 0.5)), DomainError);
}

TEST_CASE("a single focal collision") {
  const auto s = scheme_1d(LatticeMode::isolated_neighborhood);
  const int p = s.focal(), q = s.neighbor(p, 0);
  Eigen::ArrayXd x = Eigen::ArrayXd::Constant(s.site_count(), 0.9);
  x[p] = 0.5;
  x[q] = 0.25;
  const LatticeState st(s, x);
  CHECK(in_hole(st));
  CHECK(first_hit(st, 10, {Dynamics::full}) == 0);
  const auto pairs = collision_pairs(st);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].focal);

  std::vector<SwapEvent> events;
  const auto next = step(st, {Dynamics::full}, &events, 3);
  CHECK(next.x[p] == doctest::Approx(0.25));  // tau(1/4) after the swap
  CHECK(next.x[q] == doctest::Approx(0.5));
  REQUIRE(events.size() == 1);
  CHECK(events[0].step == 3);

  // decoupled: p* keeps its own coordinate
  const auto dec = step(st, {Dynamics::decoupled});
  CHECK(dec.x[p] == doctest::Approx(0.5));
  CHECK(collision_pairs(st, {Dynamics::decoupled}).empty());
  CHECK(collision_pairs(st, {Dynamics::product}).empty());

  // swapped orientation is not in H
  x[p] = 0.25;
  x[q] = 0.5;
  CHECK_FALSE(in_hole(LatticeState(s, x)));
}

TEST_CASE("disabled mode never swaps") {
  const auto s = scheme_1d(LatticeMode::disabled);
  std::mt19937_64 gen(2);
  for (int i = 0; i < 100; ++i) {
    auto st = random_state(s, gen);
    st.x[s.focal()] = 0.5;  // the collision configuration of the enabled scheme
    st.x[s.neighbor(s.focal(), 0)] = 0.25;
    CHECK(collision_pairs(st).empty());
    CHECK_FALSE(first_hit(st, 50, {Dynamics::full}).has_value());
  }
}

TEST_CASE("property: swaps conserve the coordinate multiset") {
  for (const auto& s : {scheme_2d(LatticeMode::full_lattice), scheme_1d(LatticeMode::full_lattice)}) {
    std::mt19937_64 gen(17);
    std::size_t swaps = 0;
    for (int i = 0; i < 300; ++i) {
      auto st = zone_heavy_state(s, gen);
      swaps += collision_pairs(st).size();
      Eigen::ArrayXd mapped = st.x;
      for (auto& v : mapped) v = eval_map(s.map(), v);
      const auto next = step(st, {Dynamics::full});
      CHECK(sorted(next.x) == sorted(mapped));
    }
    CHECK(swaps > 100);
  }
}

TEST_CASE("property: decoupled focal coordinate follows tau") {
  const auto s = scheme_2d(LatticeMode::full_lattice);
  std::mt19937_64 gen(19);
  for (int i = 0; i < 200; ++i) {
    auto st = zone_heavy_state(s, gen);
    double y = st.x[s.focal()];
    for (int n = 0; n < 20; ++n) {
      advance(st, {Dynamics::decoupled});
      y = eval_map(s.map(), y);
      REQUIRE(st.x[s.focal()] == y);
    }
  }
}

TEST_CASE("property: full and decoupled orbits agree before the first hit") {
  for (const auto& s : {scheme_2d(LatticeMode::full_lattice), scheme_1d(LatticeMode::isolated_neighborhood)}) {
    std::mt19937_64 gen(23);
    int hits = 0;
    for (int i = 0; i < 300; ++i) {
      const auto start = zone_heavy_state(s, gen);
      const auto hit = first_hit(start, 40, {Dynamics::full});
      const auto hit_dec = first_hit(start, 40, {Dynamics::decoupled});
      CHECK(hit == hit_dec);
      if (hit) ++hits;
      const long until = hit ? *hit : 40;
      auto a = start, b = start;
      for (long n = 0; n < until; ++n) {
        advance(a, {Dynamics::full});
        advance(b, {Dynamics::decoupled});
      }
      CHECK((a.x == b.x).all());
    }
    CHECK(hits > 0);
  }
}

TEST_CASE("property: Psi carries the tracked coordinate") {
  const auto s = scheme_2d(LatticeMode::full_lattice);
  std::mt19937_64 gen(29);
  std::uniform_int_distribution<int> site(0, s.site_count() - 1);
  int moved = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto st = zone_heavy_state(s, gen);
    const int p = site(gen);
    LatticeState fin;
    const auto path = index_path(st, p, 6, IndexVariant::psi, &fin);
    REQUIRE(path.size() == 7);
    CHECK(path[0] == p);
    double y = st.x[p];
    for (int k = 0; k < 6; ++k) y = eval_map(s.map(), y);
    CHECK(fin.x[path.back()] == y);
    CHECK(index_map(st, p, 6, IndexVariant::psi) == path.back());
    // one step moves the index by at most one neighbour
    for (int k = 0; k < 6; ++k) {
      if (path[k + 1] == path[k]) continue;
      ++moved;
      bool adjacent = false;
      for (int v = 0; v < s.direction_count(); ++v) adjacent |= s.neighbor(path[k], v) == path[k + 1];
      CHECK(adjacent);
    }
  }
  CHECK(moved > 0);
  CHECK_THROWS_AS(index_map(LatticeState::constant(s, 0.9), 0, 0, IndexVariant::psi), DomainError);
}

TEST_CASE("no collisions: Psi is the identity") {
  const auto s = scheme_1d(LatticeMode::full_lattice);
  const auto st = LatticeState::constant(s, 0.9);
  for (int k = 1; k < 5; ++k) CHECK(index_map(st, 3, k, IndexVariant::psi_tilde) == 3);
}
