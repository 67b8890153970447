#include "collab/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "collab/errors.hpp"

namespace collab {

CollisionScheme::CollisionScheme(PiecewiseExpandingMap map, SchemeParams params)
    : map_(std::move(map)), params_(std::move(params)) {
  const int d = params_.dimension;
  const int L = params_.side;
  if (d < 1 || d > 3) throw SpecificationError("dimension must be 1, 2 or 3");
  if (L < 3) throw SpecificationError("torus side must be at least 3");
  double sites = std::pow(static_cast<double>(L), d);
  if (sites > 1e6) throw SpecificationError("L^d exceeds 10^6 sites");
  site_count_ = static_cast<int>(sites);

  if (params_.focal_site.empty()) params_.focal_site.assign(static_cast<std::size_t>(d), 0);
  if (static_cast<int>(params_.focal_site.size()) != d)
    throw SpecificationError("focal_site must have one coordinate per dimension");
  for (auto& c : params_.focal_site) c = ((c % L) + L) % L;
  focal_ = site_index(params_.focal_site);

  const int nv = 2 * d;
  neighbors_.resize(static_cast<std::size_t>(site_count_ * nv));
  for (int s = 0; s < site_count_; ++s) {
    auto c = coordinates(s);
    for (int v = 0; v < nv; ++v) {
      auto n = c;
      auto& ci = n[static_cast<std::size_t>(axis(v))];
      ci = (ci + sign(v) + L) % L;
      neighbors_[static_cast<std::size_t>(s * nv + v)] = site_index(n);
    }
  }

  const bool disabled = params_.mode == LatticeMode::disabled;
  if (disabled && params_.centers.empty()) {
    params_.centers.assign(static_cast<std::size_t>(nv), 0.5);
  }
  if (static_cast<int>(params_.centers.size()) != nv)
    throw SpecificationError("need one center per direction (2d centers)");
  if (!disabled) {
    if (!(params_.delta > 0.0) || !(params_.epsilon > 0.0) || params_.delta > params_.epsilon)
      throw SpecificationError("widths must satisfy 0 < delta <= epsilon");
  }

  eps_lo_.resize(static_cast<std::size_t>(nv));
  eps_hi_ = delta_lo_ = delta_hi_ = eps_lo_;
  for (int v = 0; v < nv; ++v) {
    const auto i = static_cast<std::size_t>(v);
    const double a = params_.centers[i];
    eps_lo_[i] = a - params_.epsilon / 2;
    eps_hi_[i] = a + params_.epsilon / 2;
    delta_lo_[i] = a - params_.delta / 2;
    delta_hi_[i] = a + params_.delta / 2;
    if (disabled) {
      eps_lo_[i] = eps_hi_[i] = delta_lo_[i] = delta_hi_[i] = 2.0;  // never matches
      continue;
    }
    if (!(eps_lo_[i] > 0.0 && eps_hi_[i] < 1.0))
      throw SpecificationError("zone A_eps," + label(v) + " is not contained in (0,1)");
    const auto& pts = map_.points();
    const std::size_t b = map_.branch_index(a);
    if (!(a > pts[b] && a < pts[b + 1]))
      throw SpecificationError("center a_" + label(v) + " sits on a branch endpoint");
  }
  if (!disabled) {
    for (int v = 0; v < nv; ++v)
      for (int w = v + 1; w < nv; ++w) {
        const auto i = static_cast<std::size_t>(v), j = static_cast<std::size_t>(w);
        if (eps_lo_[i] < eps_hi_[j] && eps_lo_[j] < eps_hi_[i])
          throw SpecificationError("zones A_eps," + label(v) + " and A_eps," + label(w) +
                                   " overlap");
      }
  }

  // Exact data: centers and widths given as doubles are recovered as short rationals.
  exact_ = !disabled;
  if (exact_) {
    auto e = rational_from_double(params_.epsilon);
    auto dl = rational_from_double(params_.delta);
    exact_ = e && dl;
    if (exact_) {
      exact_epsilon_ = *e;
      exact_delta_ = *dl;
    }
    for (int v = 0; v < nv && exact_; ++v) {
      auto a = rational_from_double(params_.centers[static_cast<std::size_t>(v)]);
      if (!a) exact_ = false;
      else exact_centers_.push_back(*a);
    }
    if (!exact_) exact_centers_.clear();
  }
}

std::string CollisionScheme::label(int v) {
  return (sign(v) > 0 ? "+" : "-") + std::to_string(axis(v) + 1);
}

int CollisionScheme::parse_label(const std::string& label, int dimension) {
  if (label.size() < 2 || (label[0] != '+' && label[0] != '-'))
    throw SpecificationError("direction label '" + label + "' must look like +1 or -2");
  int axis_number = 0;
  try {
    axis_number = std::stoi(label.substr(1));
  } catch (const std::exception&) {
    throw SpecificationError("direction label '" + label + "' has no axis number");
  }
  if (axis_number < 1 || axis_number > dimension)
    throw SpecificationError("direction label '" + label + "' outside dimension");
  return 2 * (axis_number - 1) + (label[0] == '+' ? 0 : 1);
}

std::vector<int> CollisionScheme::coordinates(int site) const {
  std::vector<int> c(static_cast<std::size_t>(params_.dimension));
  for (auto& ci : c) {
    ci = site % params_.side;
    site /= params_.side;
  }
  return c;
}

int CollisionScheme::site_index(const std::vector<int>& coords) const {
  int s = 0;
  for (std::size_t i = coords.size(); i-- > 0;) s = s * params_.side + coords[i];
  return s;
}

double CollisionScheme::hole_lebesgue_measure() const {
  if (params_.mode == LatticeMode::disabled) return 0.0;
  return direction_count() * params_.delta * params_.delta;
}

LatticeState::LatticeState(const CollisionScheme& s, Eigen::ArrayXd coords)
    : scheme(&s), x(std::move(coords)) {
  if (x.size() != s.site_count()) throw DomainError("state size differs from the site count");
  if ((x < 0.0).any() || (x >= 1.0).any()) throw DomainError("coordinates must lie in [0,1)");
}

LatticeState LatticeState::constant(const CollisionScheme& s, double value) {
  return {s, Eigen::ArrayXd::Constant(s.site_count(), value)};
}

namespace {

bool pair_allowed(const CollisionScheme& s, int p, int q, DynamicsSpec dyn, bool focal) {
  switch (s.mode()) {
    case LatticeMode::disabled:
      return false;
    case LatticeMode::isolated_neighborhood:
      if (!focal) return false;
      break;
    case LatticeMode::full_lattice:
      break;
  }
  switch (dyn.kind) {
    case Dynamics::product:
      return false;
    case Dynamics::decoupled:
      return !focal;
    case Dynamics::decoupled_pair:
      return !focal && p != dyn.extra_site && q != dyn.extra_site;
    case Dynamics::full:
      return true;
  }
  return false;
}

void apply_tau(const PiecewiseExpandingMap& map, Eigen::ArrayXd& x) {
  if (const int beta = map.uniform_beta()) {
    x *= static_cast<double>(beta);
    x -= x.floor();
    x = (x >= 1.0 - 1e-15).select(0.0, x);
    return;
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = eval_map(map, x[i]);
}

}  // namespace

std::vector<CollisionPair> collision_pairs(const LatticeState& state, DynamicsSpec dynamics) {
  const auto& s = *state.scheme;
  std::vector<CollisionPair> pairs;
  if (s.mode() == LatticeMode::disabled || dynamics.kind == Dynamics::product) return pairs;
  const int p_star = s.focal();
  auto consider = [&](int p) {
    for (int a = 0; a < s.dimension(); ++a) {
      const int plus = 2 * a;
      const int q = s.neighbor(p, plus);
      const bool focal = p == p_star || q == p_star;
      if (!pair_allowed(s, p, q, dynamics, focal)) continue;
      if (s.in_zone(state.x[p], plus, focal) && s.in_zone(state.x[q], plus + 1, focal)) {
        if (p < q) pairs.push_back({p, plus, focal});
        else pairs.push_back({q, plus + 1, focal});
      }
    }
  };
  if (s.mode() == LatticeMode::isolated_neighborhood) {
    // Only the pairs containing p*: (p*, p*+e_a) and (p*-e_a, p*).
    consider(p_star);
    for (int a = 0; a < s.dimension(); ++a) {
      const int m = s.neighbor(p_star, 2 * a + 1);
      const int plus = 2 * a;
      const int q = p_star;
      if (!pair_allowed(s, m, q, dynamics, true)) continue;
      if (s.in_zone(state.x[m], plus, true) && s.in_zone(state.x[q], plus + 1, true)) {
        if (m < q) pairs.push_back({m, plus, true});
        else pairs.push_back({q, plus + 1, true});
      }
    }
  } else {
    for (int p = 0; p < s.site_count(); ++p) consider(p);
  }
  std::sort(pairs.begin(), pairs.end(), [](const CollisionPair& a, const CollisionPair& b) {
    return a.site != b.site ? a.site < b.site : a.direction < b.direction;
  });
  // Zone disjointness makes the swaps a matching.
  std::vector<int> seen;
  for (const auto& pr : pairs) {
    seen.push_back(pr.site);
    seen.push_back(s.neighbor(pr.site, pr.direction));
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw SpecificationError("collision pairs are not a matching; zones overlap");
  return pairs;
}

void advance(LatticeState& state, DynamicsSpec dynamics, std::vector<SwapEvent>* events, long n) {
  const auto& s = *state.scheme;
  for (const auto& pr : collision_pairs(state, dynamics)) {
    const int q = s.neighbor(pr.site, pr.direction);
    std::swap(state.x[pr.site], state.x[q]);
    if (events) events->push_back({n, pr.site, pr.direction, pr.focal});
  }
  apply_tau(s.map(), state.x);
}

LatticeState step(const LatticeState& state, DynamicsSpec dynamics, std::vector<SwapEvent>* events,
                  long n) {
  LatticeState next = state;
  advance(next, dynamics, events, n);
  return next;
}

bool in_hole(const LatticeState& state) {
  const auto& s = *state.scheme;
  if (s.mode() == LatticeMode::disabled) return false;
  const int p = s.focal();
  for (int v = 0; v < s.direction_count(); ++v) {
    if (s.in_zone(state.x[p], v, true) &&
        s.in_zone(state.x[s.neighbor(p, v)], CollisionScheme::opposite(v), true))
      return true;
  }
  return false;
}

std::optional<long> first_hit(const LatticeState& state, long horizon, DynamicsSpec dynamics) {
  if (horizon < 0) throw DomainError("first_hit: negative horizon");
  LatticeState cur = state;
  for (long n = 0;; ++n) {
    if (in_hole(cur)) return n;
    if (n == horizon) return std::nullopt;
    advance(cur, dynamics);
  }
}

std::vector<int> index_path(const LatticeState& state, int p, int k, IndexVariant variant,
                            LatticeState* final_state) {
  if (k < 0) throw DomainError("index_path: k must be non-negative");
  const auto& s = *state.scheme;
  const DynamicsSpec dyn{variant == IndexVariant::psi ? Dynamics::decoupled : Dynamics::full};
  LatticeState cur = state;
  std::vector<int> path{p};
  int idx = p;
  for (int j = 0; j < k; ++j) {
    for (const auto& pr : collision_pairs(cur, dyn)) {
      const int q = s.neighbor(pr.site, pr.direction);
      if (pr.site == idx) { idx = q; break; }
      if (q == idx) { idx = pr.site; break; }
    }
    advance(cur, dyn);
    path.push_back(idx);
  }
  if (final_state) *final_state = std::move(cur);
  return path;
}

int index_map(const LatticeState& state, int p, int k, IndexVariant variant) {
  if (k < 1) throw DomainError("index_map: k must be at least 1");
  return index_path(state, p, k, variant).back();
}

}  // namespace collab
