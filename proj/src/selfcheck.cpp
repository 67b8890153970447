#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "collab/errors.hpp"
#include "collab/experiment.hpp"

namespace collab {

namespace {

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

SchemeParams example_params(double epsilon, double delta, LatticeMode mode) {
  SchemeParams p = example_scheme_params(delta);
  p.epsilon = epsilon;
  p.mode = mode;
  return p;
}

SchemeParams disabled_params() {
  SchemeParams p;
  p.dimension = 1;
  p.side = 9;
  p.epsilon = 0.1;
  p.delta = 0.01;
  p.mode = LatticeMode::disabled;
  return p;
}

/// Uniform random state on the torus.
LatticeState random_state(const CollisionScheme& s, SplitMix64& gen) {
  Eigen::ArrayXd x(s.site_count());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gen.uniform();
  return {s, x};
}

}  // namespace

std::vector<Assertion> run_selfcheck(int workers) {
  std::vector<Assertion> out;
  auto check = [&](std::string name, bool pass, std::string detail = {}) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      check(name, false, std::string("threw: ") + e.what());
    }
  };

  const auto five = PiecewiseExpandingMap::mod_beta(5);
  const auto two = PiecewiseExpandingMap::mod_beta(2);

  // Site map.
  guarded("eval_map 5x at 0.3", [&] {
    const double y = eval_map(five, 0.3);
    check("eval_map 5x at 0.3 is 0.5", std::abs(y - 0.5) < 1e-15, num(y));
  });
  guarded("deriv_map 2x", [&] { check("deriv_map 2x at 0.7 is 2", deriv_map(two, 0.7) == 2.0); });
  guarded("invariant density", [&] {
    double worst = 0.0, eig = 0.0;
    for (std::size_t n : {16u, 64u, 100u}) {
      const auto inv = invariant_density(five, n);
      for (double v : inv.density.values) worst = std::max(worst, std::abs(v - 1.0));
      eig = std::max(eig, std::abs(inv.eigenvalue - 1.0));
    }
    check("beta x mod 1 has constant invariant density 1", worst < 1e-10, num(worst));
    check("closed 1D Ulam eigenvalue is 1", eig < 1e-10, num(eig));
  });

  // Lattice.
  const CollisionScheme ex(five, example_scheme_params());
  const int p = ex.focal();
  const int right = ex.neighbor(p, 0);
  guarded("collision pairs", [&] {
    LatticeState st = LatticeState::constant(ex, 0.9);
    st.x[p] = 0.5;
    st.x[right] = 0.25;
    const auto pairs = collision_pairs(st);
    check("pair (p*, +1) collides", pairs.size() == 1 && pairs[0].site == p && pairs[0].direction == 0);
    check("state in H", in_hole(st));
    check("first_hit of a state in H is 0", first_hit(st, 0, {Dynamics::full}) == 0L);
    const LatticeState full = step(st, {Dynamics::full});
    check("full step swaps then maps", full.x[p] == eval_map(five, 0.25) && full.x[right] == eval_map(five, 0.5));
    const LatticeState prod = step(st, {Dynamics::product});
    bool sitewise = true;
    for (Eigen::Index i = 0; i < st.x.size(); ++i) sitewise = sitewise && prod.x[i] == eval_map(five, st.x[i]);
    check("product step is eval_map sitewise", sitewise);
    st.x[right] = 0.5;
    check("same-center pair does not collide", collision_pairs(st).empty());
    st.x[p] = 0.25;
    st.x[right] = 0.5;
    check("wrong orientation is not in H", !in_hole(st) && collision_pairs(st).empty());
    check("all coordinates 0.9: not in H", !in_hole(LatticeState::constant(ex, 0.9)));
    check("no zone coordinates: no pairs", collision_pairs(LatticeState::constant(ex, 0.9)).empty());
  });
  guarded("disabled first hit", [&] {
    const CollisionScheme off(five, disabled_params());
    SplitMix64 gen(7);
    bool none = true;
    for (int i = 0; i < 20; ++i) none = none && !first_hit(random_state(off, gen), 1000, {Dynamics::full});
    check("zones disabled: no first hit", none);
  });
  guarded("index map", [&] {
    const CollisionScheme bulk(five, example_params(0.1, 0.01, LatticeMode::full_lattice));
    const LatticeState calm = LatticeState::constant(bulk, 0.9);
    bool fixed = true;
    for (int k = 1; k <= 5; ++k) fixed = fixed && index_map(calm, 4, k, IndexVariant::psi) == 4;
    check("no collisions: Psi_k^p = p", fixed);
    LatticeState st = LatticeState::constant(bulk, 0.9);
    st.x[4] = 0.5;
    st.x[bulk.neighbor(4, 0)] = 0.25;
    check("single swap away from p*: Psi_1^p = p+v", index_map(st, 4, 1, IndexVariant::psi) == bulk.neighbor(4, 0));
  });

  // Structural invariants on random states of a busy full-lattice scheme.
  guarded("structural invariants", [&] {
    const CollisionScheme bulk(five, example_params(0.2, 0.1, LatticeMode::full_lattice));
    const int ps = bulk.focal();
    SplitMix64 gen(11);
    bool multiset = true, focal = true, agree = true, psi = true;
    long swaps = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      const LatticeState st = random_state(bulk, gen);
      // Phi_eps only permutes: the multiset after a full step equals the product step's.
      std::vector<SwapEvent> events;
      LatticeState a = step(st, {Dynamics::full}, &events);
      LatticeState b = step(st, {Dynamics::product});
      swaps += static_cast<long>(events.size());
      std::vector<double> va(a.x.begin(), a.x.end()), vb(b.x.begin(), b.x.end());
      std::sort(va.begin(), va.end());
      std::sort(vb.begin(), vb.end());
      multiset = multiset && va == vb;

      // Decoupled dynamics leave x_{p*} to tau alone.
      LatticeState d = st;
      double y = st.x[ps];
      for (int n = 0; n < 5; ++n) {
        advance(d, {Dynamics::decoupled});
        y = eval_map(five, y);
        focal = focal && d.x[ps] == y;
      }

      // Full and decoupled orbits agree up to the first hit.
      const auto hit = first_hit(st, 20, {Dynamics::full});
      const long until = hit ? *hit : 20;
      LatticeState f = st, g = st;
      for (long n = 0; n < until && agree; ++n) {
        advance(f, {Dynamics::full});
        advance(g, {Dynamics::decoupled});
        agree = (f.x == g.x).all();
      }

      // Psi recursion and the tracked-coordinate identity.
      if (trial % 4 == 0) {
        const int q = static_cast<int>(gen() % static_cast<std::uint64_t>(bulk.site_count()));
        if (q == ps) continue;
        LatticeState end;
        const auto path = index_path(st, q, 6, IndexVariant::psi, &end);
        LatticeState cur = st;
        double yq = st.x[q];
        for (int k = 0; k < 6; ++k) {
          const int next = index_map(cur, path[static_cast<std::size_t>(k)], 1, IndexVariant::psi);
          psi = psi && next == path[static_cast<std::size_t>(k) + 1];
          advance(cur, {Dynamics::decoupled});
          yq = eval_map(five, yq);
          psi = psi && cur.x[path[static_cast<std::size_t>(k) + 1]] == yq;
        }
        psi = psi && (end.x == cur.x).all();
      }
    }
    check("Phi_eps conserves the coordinate multiset", multiset, std::to_string(swaps) + " swaps");
    check("focal coordinate follows tau under the decoupled dynamics", focal);
    check("full and decoupled orbits agree before the first hit", agree);
    check("Psi recursion and tracked-coordinate identity", psi);
  });

  // Operators.
  guarded("ulam 2x N=4", [&] {
    const auto P = ulam_matrix_1d(two, Grid1D::uniform(4).edges);
    bool ok = true;
    for (Eigen::Index r = 0; r < P.outerSize(); ++r) {
      int count = 0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P, r); it; ++it)
        if (it.value() != 0.0) {
          ++count;
          ok = ok && it.value() == 0.5;
        }
      ok = ok && count == 2;
    }
    check("2x mod 1 at N = 4: two entries of 1/2 per row", ok);
  });
  guarded("closed 1D eigenvalue", [&] {
    const auto sine = PiecewiseExpandingMap::sine_perturbed(3, 0.3);
    const double l1 = interval_eigen(five, Grid1D::uniform(50)).modulus;
    const double l2 = interval_eigen(sine, Grid1D::uniform(64)).modulus;
    check("closed 1D lambda is 1 for full-branch maps", std::abs(l1 - 1) < 1e-10 && std::abs(l2 - 1) < 1e-10,
          num(l1) + ", " + num(l2));
  });
  guarded("operator row sums", [&] {
    const CollisionScheme s(five, example_params(0.1, 0.05, LatticeMode::isolated_neighborhood));
    const BoxModel box = make_box(s, BoxShape::triple, 10, Dynamics::full);
    const RealOperator closed(box, OperatorKind::closed);
    const RealOperator open(box, OperatorKind::open);
    const double twist = 0.7;
    const ComplexOperator twisted(box, OperatorKind::twisted, twist);
    const ComplexOperator twisted0(box, OperatorKind::twisted, 0.0);
    const Eigen::ArrayXd h = box.hole_fraction();
    const Eigen::VectorXd rc = closed.row_sums(), ro = open.row_sums();
    const Eigen::VectorXcd rt = twisted.row_sums();
    const std::complex<double> e = std::polar(1.0, twist);
    double ec = 0, eo = 0, et = 0;
    bool inside = false, outside = false;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      ec = std::max(ec, std::abs(rc[i] - 1.0));
      eo = std::max(eo, std::abs(ro[i] - (1.0 - h[i])));
      et = std::max(et, std::abs(rt[i] - (1.0 - h[i] + e * h[i])));
      if (h[i] == 1.0) inside = inside || ro[i] == 0.0;
      if (h[i] == 0.0) outside = outside || std::abs(ro[i] - 1.0) < 1e-15;
    }
    check("closed row sums are 1", ec < 1e-12, num(ec));
    check("open row sums are 1 - hole fraction", eo < 1e-12 && inside && outside, num(eo));
    check("twisted row sums are 1 - h + e^{is} h", et < 1e-12, num(et));
    SplitMix64 gen(3);
    double diff = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      Eigen::VectorXcd v(box.cell_count());
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = {gen.uniform(), gen.uniform()};
      Eigen::VectorXcd a, b;
      twisted0.apply(v, a);
      Eigen::VectorXd re = v.real(), im = v.imag(), ar, ai;
      closed.apply(re, ar);
      closed.apply(im, ai);
      b = ar.cast<std::complex<double>>() + std::complex<double>(0, 1) * ai.cast<std::complex<double>>();
      diff = std::max(diff, (a - b).cwiseAbs().maxCoeff());
    }
    check("twisted at s = 0 equals closed", diff < 1e-14, num(diff));
  });
  guarded("marginals", [&] {
    const CollisionScheme off(five, disabled_params());
    const BoxModel box = make_box(off, BoxShape::pair, 20, Dynamics::decoupled);
    const auto eig = leading_eigen(RealOperator(box, OperatorKind::closed));
    double worst = 0;
    for (int a = 0; a < 2; ++a)
      for (double v : marginal_density(eig.vector, box, a).values) worst = std::max(worst, std::abs(v - 1.0));
    check("disabled pair box marginals are 1", worst < 1e-6, num(worst));
    const CollisionScheme s(five, example_params(0.1, 0.05, LatticeMode::isolated_neighborhood));
    const BoxModel tb = make_box(s, BoxShape::triple, 10, Dynamics::decoupled);
    const auto te = leading_eigen(RealOperator(tb, OperatorKind::closed));
    worst = 0;
    for (double v : marginal_density(te.vector, tb, 1).values) worst = std::max(worst, std::abs(v - 1.0));
    check("focal marginal of the closed decoupled box is Lebesgue", worst < 1e-6, num(worst));
  });
  guarded("gap diagnostics", [&] {
    const CollisionScheme s(five, example_scheme_params());
    const auto g = operator_gap_diagnostics(s, BoxShape::triple, 20, {0.04, 0.02, 0.01});
    double worst = 0;
    for (const auto& r : g.rows) worst = std::max(worst, std::abs(r.mass_difference - 2 * r.delta * r.delta) / (2 * r.delta * r.delta));
    check("Delta_delta is 2 delta^2 for Lebesgue input", worst < 1e-9, num(worst));
    const double ratio = g.rows[0].mass_difference / g.rows[1].mass_difference;
    check("halving delta divides Delta_delta by 4", std::abs(ratio / 4 - 1) <= 0.02, num(ratio));
  });

  // Monte Carlo.
  const RngSpec rng{20240611, workers};
  guarded("survival", [&] {
    const CollisionScheme off(five, disabled_params());
    const auto flat = estimate_survival(off, 1000, 50, rng);
    check("zones disabled: survival is 1", std::all_of(flat.fraction.begin(), flat.fraction.end(), [](double f) { return f == 1.0; }));
    const CollisionScheme s(five, example_params(0.2, 0.1, LatticeMode::isolated_neighborhood));
    const auto curve = estimate_survival(s, 100000, 5, rng);
    const double expect = 1.0 - s.hole_lebesgue_measure();
    const double se = std::sqrt(expect * (1 - expect) / 1e5);
    check("survival at n = 0 is 1 - 2d delta^2", std::abs(curve.fraction[0] - expect) <= 4 * se,
          num(curve.fraction[0]) + " vs " + num(expect));
    SurvivalCurve geo;
    for (int n = 0; n <= 50; ++n) geo.fraction.push_back(std::pow(0.8, n));
    const auto fit = fit_escape_rate(geo, 0, 50);
    check("fit of 0.8^n gives -ln 0.8 with R^2 = 1",
          std::abs(fit.rate + std::log(0.8)) <= 1e-12 && std::abs(fit.r2 - 1) <= 1e-12, num(fit.rate));
    const auto fit1 = fit_escape_rate(flat, 0, 50);
    check("flat curve gives rate 0", fit1.rate == 0.0);
  });
  guarded("hitting", [&] {
    const CollisionScheme s(five, example_params(0.2, 0.1, LatticeMode::isolated_neighborhood));
    const auto zero = sample_hitting_times(s, 1000, 0, {InitKind::lebesgue, 0}, rng);
    bool ok = true;
    for (std::size_t i = 0; i < zero.times.size(); ++i) ok = ok && zero.times[i] == 0;
    check("horizon 0: times are 0 (hits or censored at 0)", ok);
    const auto sample = sample_hitting_times(s, 5000, 5000, {InitKind::invariant, 1000}, rng);
    const auto t = sample.uncensored();
    double mean = 0;
    for (double x : t) mean += x;
    mean /= static_cast<double>(t.size());
    const double mu = s.hole_lebesgue_measure();
    const double xi = 1.0 / (mean * mu);
    check("mean(t) mu xi = 1", std::abs(mean * mu * xi - 1) < 1e-12);
    const auto again = sample_hitting_times(s, 5000, 5000, {InitKind::invariant, 1000}, {rng.seed, workers == 1 ? 3 : 1});
    check("hitting sample independent of worker count", again.times == sample.times);
  });
  guarded("ks", [&] {
    auto gen = SplitMix64::substream(99, 0);
    std::exponential_distribution<double> ex1(1.0);
    std::vector<double> sample(100000);
    for (auto& x : sample) x = ex1(gen);
    const auto ks = ks_exponential(sample, KsScaling::explicit_rate, 1.0);
    check("Exp(1) sample of 10^5: KS <= 0.006", ks.statistic <= 0.006, num(ks.statistic));
    const auto flat = ks_exponential(std::vector<double>(200, 3.0), KsScaling::empirical_mean);
    check("constant sample: KS >= 0.5", flat.statistic >= 0.5, num(flat.statistic));
  });
  guarded("counting", [&] {
    const CollisionScheme off(five, disabled_params());
    const auto mass = mass_asymptotics_check(off, {0.01}, DensitySource::histogram, 100, 10, 10, rng);
    check("zones disabled: both mass estimates are 0", mass[0].direct == 0.0 && mass[0].formula == 0.0);
    const auto zs = count_collisions(off, 5.0, 1e-3, 100, 10, {InitKind::lebesgue, 0}, rng);
    check("zones disabled: Z is 0", std::all_of(zs.z.begin(), zs.z.end(), [](long z) { return z == 0; }));
    const CollisionScheme s(five, example_params(0.2, 0.05, LatticeMode::isolated_neighborhood));
    const double mu = s.hole_lebesgue_measure();
    const auto a = count_collisions(s, 2.0, mu, 4000, 10, {InitKind::lebesgue, 0}, rng);
    const auto b = count_collisions(s, 4.0, mu, 4000, 10, {InitKind::lebesgue, 0}, {rng.seed + 1, workers});
    auto stats = [](const CountingSample& c) {
      double m = c.mean_z(), v = 0;
      for (long z : c.z) v += (z - m) * (z - m);
      return std::pair{m, v / static_cast<double>(c.z.size() - 1) / static_cast<double>(c.z.size())};
    };
    const auto [ma, va] = stats(a);
    const auto [mb, vb] = stats(b);
    const double se = std::sqrt(4 * va + vb);
    check("doubling t doubles mean Z", std::abs(mb - 2 * ma) <= 3 * se, num(ma) + " -> " + num(mb));
    const auto cf = empirical_cf(std::vector<long>(10000, 0), {0.0, 0.5, 1.0, 2.0}, 20);
    bool ones = true;
    for (const auto& pt : cf) ones = ones && pt.value == std::complex<double>(1.0, 0.0);
    check("Z = 0 sample: cf is 1 (and 1 at s = 0)", ones);
    std::vector<long> zz(10000);
    for (std::size_t i = 0; i < zz.size(); ++i) zz[i] = static_cast<long>(i % 7);
    const auto cf0 = empirical_cf(zz, {0.0}, 20);
    check("cf at s = 0 is 1", cf0[0].value == std::complex<double>(1.0, 0.0));
  });

  // Theory.
  guarded("theory", [&] {
    const auto orbit = exact_orbit(two, Rational(1, 3), 5);
    bool period2 = true;
    for (std::size_t j = 0; j < orbit.size(); ++j) period2 = period2 && orbit[j] == (j % 2 ? Rational(2, 3) : Rational(1, 3));
    check("2x mod 1 orbit of 1/3 alternates 1/3, 2/3", period2);
    KTerm bad;
    bad.v = 0;
    bad.v_prime = 1;
    bad.k = 0;
    const QValue q = q_k_value(ex, bad, idealized_densities(ex));
    check("orbit mismatch gives q_k = 0", q.value == 0.0 && q.exact && *q.exact == 0);
    QValue one;
    one.exact = Rational(1, 25);
    one.value = 0.04;
    const QValue th = theta_from_q({one});
    check("single term q = 1/25 gives theta = 24/25", th.exact && *th.exact == Rational(24, 25));
    const auto tilde = theta_tilde_value({}, {}, 0.9, {0.0});
    check("phi_X(0) = 1", std::abs(tilde[0].phi_x - 1.0) < 1e-15);
    // 1/2 is a branch endpoint of 2x mod 1, so the centers are 1/4 and 3/8.
    SchemeParams dp = example_scheme_params();
    dp.centers = {0.25, 0.375};
    const CollisionScheme dbl(two, dp);
    const auto none = detect_recurrence(dbl, 50);
    check("2x mod 1 with centers 1/4, 3/8: no recurrence", none.records.empty());
    const auto th1 = theta_value(dbl, none, idealized_densities(dbl));
    check("no records: theta = 1", th1.exact && *th1.exact == 1);
  });
  return out;
}

}  // namespace collab
