#include "collab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include "collab/errors.hpp"
#include "collab/ulam.hpp"

namespace collab {

std::vector<Rational> exact_orbit(const PiecewiseExpandingMap& map, const Rational& point, int k_max) {
  if (!map.is_rational_affine()) throw NonRationalError("exact orbits need a rational-affine map");
  if (k_max < 0 || k_max > 10000) throw DomainError("exact_orbit: k_max must lie in [0, 10^4]");
  if (point < 0 || point >= 1) throw DomainError("exact_orbit: point outside [0,1)");
  std::vector<Rational> orbit;
  orbit.reserve(static_cast<std::size_t>(k_max) + 1);
  orbit.push_back(point);
  std::map<Rational, int> seen{{point, 0}};
  for (int j = 1; j <= k_max; ++j) {
    orbit.push_back(eval_map(map, orbit.back()));
    auto [it, fresh] = seen.emplace(orbit.back(), j);
    if (!fresh) {
      // Periodic from here on: copy the cycle instead of evaluating.
      const int start = it->second;
      const int period = j - start;
      while (static_cast<int>(orbit.size()) <= k_max)
        orbit.push_back(orbit[orbit.size() - static_cast<std::size_t>(period)]);
      break;
    }
  }
  return orbit;
}

namespace {

double circle_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

/// Orbits of every center, exact when the scheme allows it.
struct CenterOrbits {
  bool exact = true;
  bool periodic = true;
  std::vector<std::vector<Rational>> q;
  std::vector<std::vector<double>> f;

  CenterOrbits(const CollisionScheme& scheme, int k_max) {
    const int nv = scheme.direction_count();
    exact = scheme.exact() && scheme.map().is_rational_affine();
    for (int v = 0; v < nv; ++v) {
      if (exact) {
        q.push_back(exact_orbit(scheme.map(), scheme.exact_center(v), k_max));
        std::set<Rational> distinct(q.back().begin(), q.back().end());
        if (static_cast<int>(distinct.size()) == k_max + 1) periodic = false;
        std::vector<double> fl;
        for (const auto& r : q.back()) fl.push_back(to_double(r));
        f.push_back(std::move(fl));
      } else {
        std::vector<double> fl{scheme.center(v)};
        for (int j = 1; j <= k_max; ++j) fl.push_back(eval_map(scheme.map(), fl.back()));
        f.push_back(std::move(fl));
        periodic = false;
      }
    }
  }

  /// tau^j(a_c) == a_w
  bool at(const CollisionScheme& scheme, int c, int j, int w) const {
    if (exact) return q[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] == scheme.exact_center(w);
    return circle_distance(f[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)], scheme.center(w)) < 1e-9;
  }

  bool in_eps_zone(const CollisionScheme& scheme, int c, int j, int w) const {
    if (exact) {
      const Rational& y = q[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      const Rational half = scheme.exact_epsilon() / 2;
      return y >= scheme.exact_center(w) - half && y < scheme.exact_center(w) + half;
    }
    return scheme.in_zone(f[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)], w, false);
  }
};

/// Sites the coordinate started at `start` with values tau^j(a_c) can occupy at
/// each time under the decoupled dynamics, partners chosen freely.
std::vector<std::vector<int>> reachable_sites(const CollisionScheme& scheme, const CenterOrbits& orbits,
                                              int c, int start, int k_max) {
  std::vector<std::vector<int>> reach{{start}};
  const int p = scheme.focal();
  for (int j = 0; j < k_max; ++j) {
    std::vector<int> next = reach.back();
    if (scheme.mode() == LatticeMode::full_lattice) {
      for (int w = 0; w < scheme.direction_count(); ++w) {
        if (!orbits.in_eps_zone(scheme, c, j, w)) continue;
        for (int r : reach.back()) {
          const int to = scheme.neighbor(r, w);
          if (r != p && to != p) next.push_back(to);
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
    }
    reach.push_back(std::move(next));
  }
  return reach;
}

bool contains(const std::vector<int>& sorted, int x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

}  // namespace

RecurrenceReport detect_recurrence(const CollisionScheme& scheme, int k_max) {
  if (k_max < 1 || k_max > 10000) throw DomainError("detect_recurrence: k_max must lie in [1, 10^4]");
  RecurrenceReport rep;
  rep.k_max = k_max;
  if (scheme.mode() == LatticeMode::disabled) {
    rep.notes.push_back("collisions disabled: no channels");
    return rep;
  }
  const int nv = scheme.direction_count();
  const int p = scheme.focal();
  const CenterOrbits orbits(scheme, k_max);
  rep.exact = orbits.exact;
  rep.periodic = orbits.periodic;
  if (!rep.exact) rep.notes.push_back("float orbits with tolerance 1e-9: results are approximate");

  // Lag m at which (a_v, a_{-v}) returns onto some (a_{v'}, a_{-v'}), else -1.
  auto pair_target = [&](int v, int m) {
    for (int vp = 0; vp < nv; ++vp)
      if (orbits.at(scheme, v, m, vp) && orbits.at(scheme, CollisionScheme::opposite(v), m, CollisionScheme::opposite(vp)))
        return vp;
    return -1;
  };

  for (int v = 0; v < nv; ++v) {
    const int w = CollisionScheme::opposite(v);
    const int q = scheme.neighbor(p, v);
    const auto reach = reachable_sites(scheme, orbits, w, q, k_max);
    const auto reach_tilde = reachable_sites(scheme, orbits, v, q, k_max);
    std::vector<int> lags;
    std::vector<int> lag_target;
    bool in_s = false, in_tilde = false;
    for (int m = 1; m <= k_max; ++m) {
      const int vp = pair_target(v, m);
      if (vp < 0) continue;
      const int target = scheme.neighbor(p, vp);
      if (contains(reach[static_cast<std::size_t>(m)], target)) {
        rep.records.push_back({v, vp, m, RecurrenceKind::s_rec, target, lags});
        lags.push_back(m);
        lag_target.push_back(vp);
        in_s = true;
      }
      const int target_tilde = scheme.neighbor(p, CollisionScheme::opposite(vp));
      if (contains(reach_tilde[static_cast<std::size_t>(m)], target_tilde)) {
        rep.records.push_back({v, vp, m, RecurrenceKind::s_tilde_rec, target_tilde, {}});
        in_tilde = true;
      }
    }
    if (in_s) rep.s_rec.push_back(v);
    if (in_tilde) rep.s_tilde_rec.push_back(v);
    if (!in_s && !in_tilde) continue;

    for (int k = 0; k + 1 <= k_max; ++k) {
      const int vp = pair_target(v, k + 1);
      if (vp < 0) continue;
      KTerm t;
      t.v = v;
      t.v_prime = vp;
      t.k = k;
      for (std::size_t i = 0; i < lags.size() && lags[i] < k; ++i) t.j_set.emplace_back(lags[i], lag_target[i]);
      t.target_reachable = contains(reach[static_cast<std::size_t>(k)], scheme.neighbor(p, vp));
      if (in_s) rep.k_terms.push_back(t);
      rep.k_tilde_terms.push_back(t);
    }
  }
  if (rep.s_rec.empty() && rep.s_tilde_rec.empty())
    rep.notes.push_back("no recurrence up to k_max = " + std::to_string(k_max) +
                        "; a bounded search does not prove emptiness");
  if (!rep.periodic) rep.notes.push_back("some center orbit did not close a cycle within k_max");
  if (!rep.k_terms.empty())
    rep.notes.push_back("K(v,v') read with (a_{v'}, a_{-v'}) ordering; the (a_{-v'}, a_{v'}) reading is empty for fixed centers");
  return rep;
}

namespace {

std::shared_ptr<const DensityEstimate> site_density_estimate(const PiecewiseExpandingMap& map) {
  if (map.uniform_beta() != 0) return nullptr;
  return std::make_shared<const DensityEstimate>(invariant_density(map, 4096).density);
}

}  // namespace

DensityInputs idealized_densities(const CollisionScheme& scheme) {
  DensityInputs d;
  d.mode = "idealized";
  const auto rho = site_density_estimate(scheme.map());
  d.unit = rho == nullptr;
  d.rho_tau = [rho](double x) { return rho ? rho->at(x) : 1.0; };
  const CollisionScheme* s = &scheme;
  d.neighbor_limits = [rho, s](int v) -> std::pair<double, double> {
    if (!rho) return {1.0, 1.0};
    const double a = s->center(CollisionScheme::opposite(v));
    return {rho->right_limit(a), rho->left_limit(a)};
  };
  auto limits = d.neighbor_limits;
  d.conditioned_limits = [limits](const KTerm& t) -> std::pair<double, double> {
    // The neighbour is held at p*+v, so Psi_j = p*+v at every j.
    bool hit = t.v_prime == t.v;
    for (const auto& [j, w] : t.j_set)
      if (w == t.v) hit = false;
    if (!hit) return {0.0, 0.0};
    return limits(t.v);
  };
  return d;
}

DensityInputs estimated_densities(const CollisionScheme& scheme, std::size_t grid_size, int samples,
                                  int k_cap) {
  if (samples < 1 || k_cap < 1) throw DomainError("estimated densities need samples >= 1 and k_cap >= 1");
  const BoxShape shape = scheme.dimension() == 1 ? BoxShape::triple : BoxShape::pair;
  auto box = std::make_shared<BoxModel>(make_box(scheme, shape, grid_size, Dynamics::decoupled));
  const RealOperator closed(*box, OperatorKind::closed);
  const auto eig = leading_eigen(closed);
  const Eigen::VectorXd mass = eig.vector;

  DensityInputs d;
  d.mode = "estimated";
  const auto rho = std::make_shared<const DensityEstimate>(invariant_density(scheme.map(), 4096).density);
  d.rho_tau = [rho](double x) { return rho->at(x); };

  const int nv = scheme.direction_count();
  const int p = scheme.focal();
  const auto n = static_cast<Eigen::Index>(box->grid.size());
  auto channel_of = [&](int v) {
    for (std::size_t c = 0; c < box->channels.size(); ++c)
      if (box->channels[c].direction == v) return static_cast<int>(c);
    return 0;  // d >= 2: off-box channels borrow the +e1 marginal
  };

  // Per channel: marginal limits, and for each of the two bins next to
  // a_{-v} the sampled index paths of the neighbour with their cell weights.
  struct Side {
    double width = 0.0;
    std::vector<double> weight;            // per sample
    std::vector<std::vector<int>> paths;   // per sample, Psi_0 .. Psi_{k_cap}
  };
  struct ChannelData {
    std::pair<double, double> limits;
    Side side[2];  // 0: bin right of a (a+), 1: bin left of a (a-)
    bool in_box = true;
  };
  auto data = std::make_shared<std::vector<ChannelData>>(static_cast<std::size_t>(nv));
  for (int v = 0; v < nv; ++v) {
    auto& cd = (*data)[static_cast<std::size_t>(v)];
    const int c = channel_of(v);
    cd.in_box = box->channels[static_cast<std::size_t>(c)].direction == v;
    const int axis = box->channels[static_cast<std::size_t>(c)].partner_axis;
    const auto marg = marginal_density(mass, *box, axis);
    const double a = scheme.center(CollisionScheme::opposite(v));
    cd.limits = {marg.right_limit(a), marg.left_limit(a)};
    if (!cd.in_box) continue;
    const std::size_t right_bin = box->grid.bin_of(a);
    const std::size_t bins[2] = {right_bin, right_bin == 0 ? box->grid.size() - 1 : right_bin - 1};
    Eigen::Index stride = 1;
    for (int ax = 0; ax < axis; ++ax) stride *= n;
    const int q = scheme.neighbor(p, v);
    std::vector<double> point(static_cast<std::size_t>(box->axes()));
    for (int sd = 0; sd < 2; ++sd) {
      Side& side = cd.side[sd];
      side.width = box->grid.width(bins[sd]);
      for (Eigen::Index i = 0; i < mass.size(); ++i) {
        if (static_cast<std::size_t>((i / stride) % n) != bins[sd] || mass[i] == 0.0) continue;
        auto rng = SplitMix64::substream(static_cast<std::uint64_t>(v * 2 + sd + 1), static_cast<std::uint64_t>(i));
        for (int k = 0; k < samples; ++k) {
          Eigen::Index rest = i;
          for (int ax = 0; ax < box->axes(); ++ax) {
            const auto cell = static_cast<std::size_t>(rest % n);
            rest /= n;
            point[static_cast<std::size_t>(ax)] = box->grid.edges[cell] + rng.uniform() * box->grid.width(cell);
          }
          LatticeState state = LatticeState::constant(scheme, 0.0);
          for (std::size_t ax = 0; ax < box->sites.size(); ++ax) state.x[box->sites[ax]] = point[ax];
          side.paths.push_back(index_path(state, q, k_cap, IndexVariant::psi));
          side.weight.push_back(mass[i] / samples);
        }
      }
    }
  }

  d.neighbor_limits = [data](int v) { return (*data)[static_cast<std::size_t>(v)].limits; };
  const CollisionScheme* s = &scheme;
  d.conditioned_limits = [data, s, k_cap, p](const KTerm& t) -> std::pair<double, double> {
    const auto& cd = (*data)[static_cast<std::size_t>(t.v)];
    if (t.k > k_cap) return {0.0, 0.0};
    if (!cd.in_box) {
      // Only the neighbour-held reading is available off the box.
      bool hit = t.v_prime == t.v;
      for (const auto& [j, w] : t.j_set)
        if (w == t.v) hit = false;
      return hit ? cd.limits : std::pair<double, double>{0.0, 0.0};
    }
    const int target = s->neighbor(p, t.v_prime);
    double out[2];
    for (int sd = 0; sd < 2; ++sd) {
      const Side& side = cd.side[sd];
      double m = 0.0;
      for (std::size_t i = 0; i < side.paths.size(); ++i) {
        const auto& path = side.paths[i];
        bool hit = path[static_cast<std::size_t>(t.k)] == target;
        for (const auto& [j, w] : t.j_set)
          if (hit && path[static_cast<std::size_t>(j)] == s->neighbor(p, w)) hit = false;
        if (hit) m += side.weight[i];
      }
      out[sd] = m / side.width;
    }
    return {out[0], out[1]};
  };
  return d;
}

namespace {

double normalizer(const CollisionScheme& scheme, const DensityInputs& d) {
  double norm = 0.0;
  for (int v = 0; v < scheme.direction_count(); ++v) {
    const auto [hi, lo] = d.neighbor_limits(v);
    norm += d.rho_tau(scheme.center(v)) * (hi + lo) / 2.0;
  }
  return norm;
}

}  // namespace

QValue q_k_value(const CollisionScheme& scheme, const KTerm& term, const DensityInputs& densities) {
  if (term.k < 0) throw DomainError("q_k needs k >= 0");
  const int nv = scheme.direction_count();
  if (term.v < 0 || term.v >= nv || term.v_prime < 0 || term.v_prime >= nv)
    throw DomainError("q_k: direction outside the scheme");
  const int w = CollisionScheme::opposite(term.v);
  const int wp = CollisionScheme::opposite(term.v_prime);
  const PiecewiseExpandingMap& map = scheme.map();
  const bool exact = scheme.exact() && map.is_rational_affine();

  QValue out;
  const double norm = normalizer(scheme, densities);
  if (!(norm > 0.0)) throw DomainError("q_k: zero normalizer (degenerate densities)");

  if (exact) {
    const auto a = exact_orbit(map, scheme.exact_center(term.v), term.k + 1);
    const auto b = exact_orbit(map, scheme.exact_center(w), term.k + 1);
    if (a.back() != scheme.exact_center(term.v_prime) || b.back() != scheme.exact_center(wp)) {
      out.exact = Rational(0);
      return out;
    }
    const auto [hi, lo] = densities.conditioned_limits(term);
    if (hi == 0.0 && lo == 0.0) {
      out.exact = Rational(0);
      return out;
    }
    const Rational dv = abs(deriv_iterate(map, scheme.exact_center(term.v), term.k + 1));
    const Rational dw = abs(deriv_iterate(map, scheme.exact_center(w), term.k + 1));
    const auto ind = densities.unit ? rational_from_double((hi + lo) / 2.0) : std::nullopt;
    if (ind) {
      // Unit densities: the indicator average is 0, 1/2 or 1.
      const Rational q = *ind / (dv * dw) / Rational(nv);
      out.exact = q;
      out.value = to_double(q);
      return out;
    }
    out.value = densities.rho_tau(scheme.center(term.v)) / to_double(dv) * (hi + lo) /
                (2.0 * to_double(dw)) / norm;
    return out;
  }

  double x = scheme.center(term.v), y = scheme.center(w);
  for (int j = 0; j <= term.k; ++j) {
    x = eval_map(map, x);
    y = eval_map(map, y);
  }
  if (circle_distance(x, scheme.center(term.v_prime)) > 1e-9 || circle_distance(y, scheme.center(wp)) > 1e-9)
    return out;
  const double dv = std::abs(deriv_iterate(map, scheme.center(term.v), term.k + 1));
  const double dw = std::abs(deriv_iterate(map, scheme.center(w), term.k + 1));
  const auto [hi, lo] = densities.conditioned_limits(term);
  out.value = densities.rho_tau(scheme.center(term.v)) / dv * (hi + lo) / (2.0 * dw) / norm;
  return out;
}

ThetaValue theta_value(const CollisionScheme& scheme, const RecurrenceReport& rec,
                       const DensityInputs& densities, int truncation) {
  if (truncation < 0) throw DomainError("theta truncation must be >= 0");
  ThetaValue out;
  out.truncation = truncation;
  out.tail_bound = std::pow(scheme.map().expansion_factor(), -2.0 * truncation);
  double sum1 = 0.0, sum0 = 0.0, sumf = 0.0;
  Rational r1 = 0, r0 = 0, rf = 0;
  bool all_exact = true;
  for (const KTerm& t : rec.k_terms) {
    if (t.k > truncation) continue;
    const QValue q = q_k_value(scheme, t, densities);
    KTerm first = t;
    if (t.k >= 1) first.j_set.insert(first.j_set.begin(), {0, t.v});
    const QValue qf = q_k_value(scheme, first, densities);
    all_exact = all_exact && q.exact && qf.exact;
    sum0 += q.value;
    sumf += qf.value;
    if (q.exact) r0 += *q.exact;
    if (qf.exact) rf += *qf.exact;
    if (t.k >= 1) {
      sum1 += q.value;
      if (q.exact) r1 += *q.exact;
      out.q_table.emplace_back(t.v, t.v_prime, t.k, q.value);
    }
  }
  out.theta = 1.0 - sum1;
  out.theta_k0 = 1.0 - sum0;
  out.theta_first_return = 1.0 - sumf;
  if (all_exact) {
    out.exact = Rational(1) - r1;
    out.exact_k0 = Rational(1) - r0;
    out.exact_first_return = Rational(1) - rf;
  }
  if (rec.k_terms.empty()) out.notes.push_back("S^rec is empty: theta = 1");
  if (!(out.theta > 0.0 && out.theta <= 1.0))
    out.notes.push_back("theta outside (0,1]: formula inputs are inconsistent");
  if (!rec.exact) out.notes.push_back("approximate: float orbits");
  return out;
}

QValue theta_from_q(const std::vector<QValue>& terms) {
  QValue out;
  out.value = 1.0;
  Rational exact = 1;
  bool all_exact = true;
  for (const auto& q : terms) {
    out.value -= q.value;
    if (q.exact) exact -= *q.exact;
    else all_exact = false;
  }
  if (all_exact) {
    out.exact = exact;
    out.value = to_double(exact);
  }
  return out;
}

BetaTable closed_form_betas(const CollisionScheme& scheme, const RecurrenceReport& rec,
                            const DensityInputs& densities) {
  if (!rec.s_tilde_rec.empty())
    throw SpecificationError("no closed form for beta when S~^rec is non-empty; estimate them");
  BetaTable table;
  for (const KTerm& t : rec.k_terms) {
    if (t.k < 1) continue;
    std::vector<std::pair<double, double>> row(static_cast<std::size_t>(t.k) + 1, {0.0, 0.0});
    row[0].first = q_k_value(scheme, t, densities).value;
    table.entries[{t.v, t.v_prime, t.k}] = std::move(row);
  }
  table.notes.push_back("closed form: beta1_k(0) = q_k, beta1_k(j >= 1) = 0, beta2 = 0");
  return table;
}

BetaTable estimated_betas(const CollisionScheme& scheme, int k_max, std::size_t n_starts,
                          const RngSpec& rng) {
  if (k_max < 1) throw DomainError("estimated betas need k_max >= 1");
  BetaTable table;
  for (int k = 1; k <= k_max; ++k) {
    std::vector<std::pair<double, double>> row, err;
    for (int j = 0; j <= k; ++j) {
      // Distinct substream seeds per (k, j, variant).
      RngSpec r = rng;
      r.seed = mix64(rng.seed ^ (static_cast<std::uint64_t>(k) << 32) ^ (static_cast<std::uint64_t>(j) << 8));
      const BetaEstimate b1 = estimate_beta(scheme, k, j, 1, n_starts, r);
      r.seed = mix64(r.seed + 2);
      const BetaEstimate b2 = estimate_beta(scheme, k, j, 2, n_starts, r);
      row.emplace_back(b1.value, b2.value);
      err.emplace_back(b1.stderr_, b2.stderr_);
    }
    table.entries[{-1, -1, k}] = std::move(row);
    table.stderrs[{-1, -1, k}] = std::move(err);
  }
  table.notes.push_back("Monte Carlo betas aggregated over channels");
  return table;
}

std::vector<ThetaTildePoint> theta_tilde_value(const RecurrenceReport& rec, const BetaTable& betas,
                                               double theta, const std::vector<double>& s_grid) {
  (void)rec;
  if (!(theta > 0.0)) throw DomainError("phi_X needs theta > 0");
  for (const auto& [key, row] : betas.entries) {
    double total = 0.0;
    for (const auto& [b1, b2] : row) {
      if (b1 < 0.0 || b2 < 0.0) throw DomainError("negative beta input");
      total += b1 + b2;
    }
    if (total > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "beta inputs at k = " << std::get<2>(key) << " sum to " << total << " > 1";
      throw DomainError(msg.str());
    }
  }
  std::vector<ThetaTildePoint> out;
  for (double s : s_grid) {
    const std::complex<double> eis = std::polar(1.0, s);
    std::complex<double> sum = 0.0;
    for (const auto& [key, row] : betas.entries)
      for (std::size_t j = 0; j < row.size(); ++j)
        sum += std::polar(1.0, s * static_cast<double>(j)) * (row[j].first - eis * row[j].second);
    ThetaTildePoint pt;
    pt.s = s;
    pt.theta_tilde = 1.0 - sum;
    pt.phi_x = pt.theta_tilde * (eis - 1.0) / theta + 1.0;
    out.push_back(pt);
  }
  return out;
}

bool ThetaReport::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

std::vector<SpectralTheta> spectral_theta(const CollisionScheme& scheme,
                                          const std::vector<double>& deltas, std::size_t grid_size) {
  const BoxShape shape = scheme.dimension() == 1 ? BoxShape::triple : BoxShape::pair;
  std::vector<SpectralTheta> out;
  for (double delta : deltas) {
    const CollisionScheme s = with_delta(scheme, delta);
    const BoxModel box = make_box(s, shape, grid_size, Dynamics::decoupled);
    const RealOperator closed(box, OperatorKind::closed);
    const RealOperator open(box, OperatorKind::open);
    const auto ce = leading_eigen(closed);
    const auto oe = leading_eigen(open);
    SpectralTheta row;
    row.delta = delta;
    row.lambda = oe.lambda;
    row.mu_hole = (ce.vector.array() * box.hole_fraction()).sum() / ce.vector.sum();
    if (!(row.mu_hole > 0.0)) throw DomainError("spectral theta: hole has no mass");
    row.theta_spec = (1.0 - row.lambda) / row.mu_hole;
    out.push_back(row);
  }
  return out;
}

SchemeParams example_scheme_params(double delta) {
  SchemeParams p;
  p.dimension = 1;
  p.side = 9;
  p.centers = {0.5, 0.25};
  p.epsilon = 0.1;
  p.delta = delta;
  p.mode = LatticeMode::isolated_neighborhood;
  return p;
}

ThetaReport example_report(bool with_spectral, std::size_t grid_size) {
  const CollisionScheme scheme(PiecewiseExpandingMap::mod_beta(5), example_scheme_params());
  ThetaReport r;
  r.map = scheme.map().describe();
  r.recurrence = detect_recurrence(scheme, 200);
  const DensityInputs dens = idealized_densities(scheme);
  r.theta = theta_value(scheme, r.recurrence, dens, 200);
  const std::vector<double> s_grid{0.0, 0.5, 1.0, 2.0, std::numbers::pi};
  if (r.recurrence.s_tilde_rec.empty()) {
    const BetaTable betas = closed_form_betas(scheme, r.recurrence, dens);
    r.tilde = theta_tilde_value(r.recurrence, betas, r.theta.theta, s_grid);
  }

  auto add = [&](std::string name, bool pass, std::string detail) {
    r.assertions.push_back({std::move(name), pass, std::move(detail)});
  };
  add("S_rec = {(a_+1, a_-1), (a_-1, a_+1)}", r.recurrence.s_rec == std::vector<int>{0, 1},
      std::to_string(r.recurrence.s_rec.size()) + " channels");
  add("S~_rec is empty", r.recurrence.s_tilde_rec.empty(),
      std::to_string(r.recurrence.s_tilde_rec.size()) + " channels");
  const Rational target = Rational(1) - Rational(1, 625);
  add("theta = 1 - 5^-4 exactly", r.theta.exact && *r.theta.exact == target,
      r.theta.exact ? to_string(*r.theta.exact) : std::string("not exact"));
  bool tail_zero = true;
  for (const auto& [v, vp, k, q] : r.theta.q_table)
    if (k >= 2 && q != 0.0) tail_zero = false;
  add("q_k = 0 for k >= 2", tail_zero, "");
  double phi_err = r.tilde.empty() ? 1.0 : 0.0, tilde_err = phi_err;
  for (const auto& pt : r.tilde) {
    phi_err = std::max(phi_err, std::abs(pt.phi_x - std::polar(1.0, pt.s)));
    tilde_err = std::max(tilde_err, std::abs(pt.theta_tilde - r.theta.theta));
  }
  add("theta~(s) = theta on the s grid", tilde_err <= 1e-9, "max error " + std::to_string(tilde_err));
  add("phi_X(s) = e^{is} on the s grid", phi_err <= 1e-12, "max error " + std::to_string(phi_err));

  if (with_spectral) r.spectral = spectral_theta(scheme, {0.02, 0.01, 0.005}, grid_size);
  return r;
}

}  // namespace collab
