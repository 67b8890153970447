#include "collab/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "collab/errors.hpp"
#include "collab/rng.hpp"

namespace collab {

std::size_t Grid1D::bin_of(double x) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto idx = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(size()) - 1));
}

Grid1D Grid1D::uniform(std::size_t n) {
  if (n == 0) throw DomainError("grid needs at least one cell");
  Grid1D g;
  g.edges.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g.edges[i] = static_cast<double>(i) / static_cast<double>(n);
  return g;
}

Grid1D Grid1D::markov_refined(const PiecewiseExpandingMap& map, std::size_t n,
                              const std::vector<Rational>& extra, std::size_t max_cells) {
  if (!map.is_rational_affine()) throw NonRationalError("Markov refinement needs a rational-affine map");
  if (n == 0) throw DomainError("grid needs at least one cell");
  std::set<Rational> points;
  std::vector<Rational> work;
  auto add = [&](const Rational& p) {
    const Rational x = frac(p);
    if (points.insert(x).second) work.push_back(x);
  };
  for (std::size_t i = 0; i < n; ++i) add(Rational(static_cast<long>(i), static_cast<long>(n)));
  for (const auto& p : map.exact_points()) add(p);
  for (const auto& p : extra) add(p);
  while (!work.empty()) {
    if (points.size() > max_cells)
      throw ResolutionError("Markov refinement exceeds " + std::to_string(max_cells) +
                            " cells; use a uniform grid");
    const Rational x = work.back();
    work.pop_back();
    add(eval_map(map, x));
  }
  Grid1D g;
  g.exact_edges.assign(points.begin(), points.end());
  g.exact_edges.emplace_back(1);
  g.edges.reserve(g.exact_edges.size());
  for (const auto& e : g.exact_edges) g.edges.push_back(to_double(e));
  g.markov = true;
  return g;
}

Eigen::Index BoxModel::cell_count() const {
  Eigen::Index c = 1;
  for (int a = 0; a < axes(); ++a) c *= static_cast<Eigen::Index>(grid.size());
  return c;
}

int BoxModel::axis_of(int site) const {
  for (int a = 0; a < axes(); ++a)
    if (sites[static_cast<std::size_t>(a)] == site) return a;
  return -1;
}

Eigen::ArrayXd BoxModel::channel_fraction(std::size_t c) const {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto& ch = channels[c];
  Eigen::Index stride_f = 1, stride_p = 1;
  for (int a = 0; a < ch.focal_axis; ++a) stride_f *= n;
  for (int a = 0; a < ch.partner_axis; ++a) stride_p *= n;
  Eigen::ArrayXd h(cell_count());
  for (Eigen::Index i = 0; i < h.size(); ++i)
    h[i] = focal_overlap[c][(i / stride_f) % n] * partner_overlap[c][(i / stride_p) % n];
  return h;
}

Eigen::ArrayXd BoxModel::hole_fraction() const {
  Eigen::ArrayXd h = Eigen::ArrayXd::Zero(cell_count());
  for (std::size_t c = 0; c < channels.size(); ++c) h += channel_fraction(c);
  return h;
}

namespace {

Eigen::ArrayXd overlap_fractions(const Grid1D& grid, const CollisionScheme& s, int v) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n);
  if (!grid.exact_edges.empty() && s.exact()) {
    const Rational lo = s.exact_center(v) - s.exact_delta() / 2;
    const Rational hi = s.exact_center(v) + s.exact_delta() / 2;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& a = grid.exact_edges[static_cast<std::size_t>(i)];
      const auto& b = grid.exact_edges[static_cast<std::size_t>(i) + 1];
      const Rational l = a > lo ? a : lo;
      const Rational r = b < hi ? b : hi;
      if (r > l) out[i] = to_double((r - l) / (b - a));
    }
    return out;
  }
  const double lo = s.zone_lo(v, true), hi = s.zone_hi(v, true);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = grid.edges[static_cast<std::size_t>(i)];
    const double b = grid.edges[static_cast<std::size_t>(i) + 1];
    const double ov = std::min(b, hi) - std::max(a, lo);
    if (ov > 0) out[i] = ov / (b - a);
  }
  return out;
}

bool edge_aligned(const Grid1D& grid, const CollisionScheme& s, int v) {
  if (grid.exact_edges.empty() || !s.exact()) return false;
  const Rational lo = s.exact_center(v) - s.exact_delta() / 2;
  const Rational hi = s.exact_center(v) + s.exact_delta() / 2;
  return std::binary_search(grid.exact_edges.begin(), grid.exact_edges.end(), lo) &&
         std::binary_search(grid.exact_edges.begin(), grid.exact_edges.end(), hi);
}

}  // namespace

BoxModel make_box(const CollisionScheme& scheme, BoxShape shape, std::size_t n, Dynamics variant,
                  bool refine) {
  if (scheme.mode() == LatticeMode::full_lattice)
    throw ModeError("box operators need isolated_neighborhood mode; bulk collisions leave the box open");
  if (variant != Dynamics::decoupled && variant != Dynamics::full)
    throw ModeError("box dynamics must be decoupled or full");
  BoxModel box;
  box.scheme = &scheme;
  box.variant = variant;
  const int p = scheme.focal();
  const int right = scheme.neighbor(p, 0);
  if (shape == BoxShape::pair) {
    box.sites = {p, right};
  } else {
    if (scheme.dimension() != 1) throw ModeError("three-site boxes are available for d = 1 only");
    box.sites = {scheme.neighbor(p, 1), p, right};
  }
  if (scheme.mode() != LatticeMode::disabled) {
    if (shape == BoxShape::pair) {
      box.channels.push_back({0, 1, 0});
    } else {
      box.channels.push_back({1, 2, 0});
      box.channels.push_back({1, 0, 1});
    }
  }
  if (variant == Dynamics::full &&
      static_cast<int>(box.channels.size()) != scheme.direction_count() &&
      scheme.mode() != LatticeMode::disabled)
    throw ModeError("full box dynamics needs every focal channel inside the box");

  std::vector<Rational> extra;
  if (scheme.exact()) {
    for (const auto& ch : box.channels)
      for (int v : {ch.direction, CollisionScheme::opposite(ch.direction)}) {
        extra.push_back(scheme.exact_center(v) - scheme.exact_delta() / 2);
        extra.push_back(scheme.exact_center(v) + scheme.exact_delta() / 2);
      }
  }
  if (refine && scheme.map().is_rational_affine() &&
      (scheme.exact() || scheme.mode() == LatticeMode::disabled)) {
    box.grid = Grid1D::markov_refined(scheme.map(), n, extra);
  } else {
    box.grid = Grid1D::uniform(n);
    if (scheme.map().is_rational_affine()) {
      box.grid.exact_edges.reserve(n + 1);
      for (std::size_t i = 0; i <= n; ++i)
        box.grid.exact_edges.emplace_back(static_cast<long>(i), static_cast<long>(n));
    }
  }

  for (const auto& ch : box.channels) {
    const int v = ch.direction, w = CollisionScheme::opposite(ch.direction);
    const bool aligned = edge_aligned(box.grid, scheme, v) && edge_aligned(box.grid, scheme, w);
    if (!aligned && scheme.delta() * static_cast<double>(n) < 4.0)
      throw ResolutionError("hole unresolved: delta * N < 4 and zone endpoints are not grid edges");
    box.focal_overlap.push_back(overlap_fractions(box.grid, scheme, v));
    box.partner_overlap.push_back(overlap_fractions(box.grid, scheme, w));
  }
  return box;
}

template <typename Scalar>
TransferOperator<Scalar>::TransferOperator(const BoxModel& box, OperatorKind kind, double s)
    : box_(&box), kind_(kind), s_(kind == OperatorKind::twisted ? s : 0.0) {
  if constexpr (!is_complex<Scalar>::value) {
    if (kind == OperatorKind::twisted && s != 0.0)
      throw DomainError("twisted operator with s != 0 needs complex scalars");
  }
  const bool swapping = kind == OperatorKind::twisted ||
                        (kind == OperatorKind::closed && box.variant == Dynamics::full);
  if (kind == OperatorKind::twisted && box.scheme->mode() != LatticeMode::disabled &&
      static_cast<int>(box.channels.size()) != box.scheme->direction_count())
    throw ModeError("twisted operator follows the full dynamics; the box must hold every channel");

  P_ = ulam_matrix_1d(box.scheme->map(), box.grid.edges);
  const Eigen::Index dim = box.cell_count();
  stay_ = Vector<Scalar>::Ones(dim);
  if (kind == OperatorKind::closed && !swapping) return;

  Scalar twist_factor(1.0);
  if constexpr (is_complex<Scalar>::value) twist_factor = std::polar(1.0, s_);

  const auto n = static_cast<Eigen::Index>(box.grid.size());
  for (std::size_t c = 0; c < box.channels.size(); ++c) {
    const Eigen::ArrayXd h = box.channel_fraction(c);
    const auto& ch = box.channels[c];
    Eigen::Index stride_f = 1, stride_p = 1;
    for (int a = 0; a < ch.focal_axis; ++a) stride_f *= n;
    for (int a = 0; a < ch.partner_axis; ++a) stride_p *= n;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (h[i] == 0.0) continue;
      stay_[i] -= h[i];
      if (!swapping) continue;
      const Eigen::Index fi = (i / stride_f) % n, pi = (i / stride_p) % n;
      const Eigen::Index j = i + (pi - fi) * stride_f + (fi - pi) * stride_p;
      Scalar w = h[i];
      if (kind == OperatorKind::twisted) w *= twist_factor;
      swaps_.push_back({i, j, w});
    }
  }
  for (Eigen::Index i = 0; i < dim; ++i)
    if (std::abs(stay_[i]) < 1e-15) stay_[i] = Scalar(0);
}

template <typename Scalar>
void TransferOperator<Scalar>::kron_apply(Vector<Scalar>& v, Vector<Scalar>& tmp) const {
  const auto n = static_cast<Eigen::Index>(box_->grid.size());
  const int k = box_->axes();
  Eigen::Index low = 1;
  for (int a = 0; a < k; ++a) {
    Eigen::Index high = 1;
    for (int b = a + 1; b < k; ++b) high *= n;
    tmp.setZero(v.size());
    for (Eigen::Index h = 0; h < high; ++h) {
      const Eigen::Index base = h * n * low;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = base + i * low;
        for (typename Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P_, i); it; ++it) {
          const Eigen::Index dst = base + it.col() * low;
          const double val = it.value();
          if (low == 1) {
            tmp[dst] += val * v[src];
          } else {
            tmp.segment(dst, low) += val * v.segment(src, low);
          }
        }
      }
    }
    v.swap(tmp);
    low *= n;
  }
}

template <typename Scalar>
void TransferOperator<Scalar>::apply(const Vector<Scalar>& in, Vector<Scalar>& out) const {
  Vector<Scalar> tmp = in.cwiseProduct(stay_);
  for (const auto& sw : swaps_) tmp[sw.to] += sw.weight * in[sw.from];
  out.resize(in.size());
  kron_apply(tmp, out);
  out.swap(tmp);
}

template <typename Scalar>
Vector<Scalar> TransferOperator<Scalar>::row_sums() const {
  const Eigen::VectorXd r1 = P_ * Eigen::VectorXd::Ones(P_.cols());
  const auto n = static_cast<Eigen::Index>(box_->grid.size());
  const Eigen::Index dim = box_->cell_count();
  Eigen::VectorXd kron = Eigen::VectorXd::Ones(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::Index rest = i;
    for (int a = 0; a < box_->axes(); ++a) {
      kron[i] *= r1[rest % n];
      rest /= n;
    }
  }
  Vector<Scalar> rs = stay_.cwiseProduct(kron.template cast<Scalar>());
  for (const auto& sw : swaps_) rs[sw.from] += sw.weight * kron[sw.to];
  return rs;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> TransferOperator<Scalar>::to_sparse(
    Eigen::Index max_dimension) const {
  const Eigen::Index dim = box_->cell_count();
  if (dim > max_dimension) throw DomainError("operator too large to materialize");
  const auto n = static_cast<Eigen::Index>(box_->grid.size());
  const int k = box_->axes();
  std::vector<Eigen::Triplet<Scalar>> triplets;
  // Row `src` of the Kronecker product, scaled by w, added to row `row`.
  auto kron_row = [&](Eigen::Index row, Eigen::Index src, Scalar w) {
    std::vector<std::pair<Eigen::Index, double>> acc{{0, 1.0}};
    Eigen::Index rest = src, stride = 1;
    for (int a = 0; a < k; ++a) {
      const Eigen::Index ia = rest % n;
      rest /= n;
      std::vector<std::pair<Eigen::Index, double>> next;
      for (const auto& [col, val] : acc)
        for (typename Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P_, ia); it; ++it)
          next.emplace_back(col + it.col() * stride, val * it.value());
      acc.swap(next);
      stride *= n;
    }
    for (const auto& [col, val] : acc) triplets.emplace_back(row, col, w * val);
  };
  for (Eigen::Index i = 0; i < dim; ++i)
    if (stay_[i] != Scalar(0)) kron_row(i, i, stay_[i]);
  for (const auto& sw : swaps_) kron_row(sw.from, sw.to, sw.weight);
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> A(dim, dim);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

template <typename Scalar>
SpectralResult<Scalar> leading_eigen(const TransferOperator<Scalar>& op, double tolerance,
                                     int max_iterations) {
  const auto& box = op.box();
  const auto n = static_cast<Eigen::Index>(box.grid.size());
  Vector<Scalar> start(op.dimension());
  for (Eigen::Index i = 0; i < start.size(); ++i) {
    Eigen::Index rest = i;
    double vol = 1.0;
    for (int a = 0; a < box.axes(); ++a) {
      vol *= box.grid.width(static_cast<std::size_t>(rest % n));
      rest /= n;
    }
    start[i] = vol;
  }
  auto pr = power_iterate<Scalar>([&](const Vector<Scalar>& in, Vector<Scalar>& out) { op.apply(in, out); },
                                  std::move(start), tolerance, max_iterations);
  SpectralResult<Scalar> out;
  out.lambda = pr.lambda;
  out.modulus = std::abs(pr.lambda);
  if constexpr (is_complex<Scalar>::value) out.phase = std::arg(pr.lambda);
  else out.phase = pr.lambda < 0 ? std::numbers::pi : 0.0;
  out.vector = std::move(pr.vector);
  out.iterations = pr.iterations;
  out.residual = pr.residual;
  out.escape_rate = -std::log(out.modulus);
  return out;
}

template class TransferOperator<double>;
template class TransferOperator<std::complex<double>>;
template SpectralResult<double> leading_eigen(const TransferOperator<double>&, double, int);
template SpectralResult<std::complex<double>> leading_eigen(
    const TransferOperator<std::complex<double>>&, double, int);

SpectralResult<double> interval_eigen(const PiecewiseExpandingMap& map, const Grid1D& grid,
                                      double hole_lo, double hole_hi, double tolerance,
                                      int max_iterations) {
  const auto P = ulam_matrix_1d(map, grid.edges);
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd keep = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = grid.edges[static_cast<std::size_t>(i)];
    const double b = grid.edges[static_cast<std::size_t>(i) + 1];
    const double ov = std::min(b, hole_hi) - std::max(a, hole_lo);
    if (ov > 0) keep[i] = 1.0 - ov / (b - a);
    start[i] = b - a;
  }
  auto pr = power_iterate<double>(
      [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        out.noalias() = P.transpose() * in.cwiseProduct(keep);
      },
      std::move(start), tolerance, max_iterations);
  SpectralResult<double> out;
  out.lambda = pr.lambda;
  out.modulus = std::abs(pr.lambda);
  out.vector = std::move(pr.vector);
  out.iterations = pr.iterations;
  out.residual = pr.residual;
  out.escape_rate = -std::log(out.modulus);
  return out;
}

DensityEstimate marginal_density(const Eigen::VectorXd& mass, const BoxModel& box, int axis,
                                 const BoxPredicate* condition, int samples, std::uint64_t seed) {
  if (axis < 0 || axis >= box.axes()) throw DomainError("marginal_density: axis outside the box");
  if (mass.size() != box.cell_count()) throw DomainError("marginal_density: mass has the wrong size");
  const auto n = static_cast<Eigen::Index>(box.grid.size());
  Eigen::Index stride = 1;
  for (int a = 0; a < axis; ++a) stride *= n;
  DensityEstimate d;
  d.edges = box.grid.edges;
  d.values.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> point(static_cast<std::size_t>(box.axes()));
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    double m = mass[i];
    if (m == 0.0) continue;
    if (condition) {
      auto rng = SplitMix64::substream(seed, static_cast<std::uint64_t>(i));
      int hits = 0;
      for (int k = 0; k < samples; ++k) {
        Eigen::Index rest = i;
        for (int a = 0; a < box.axes(); ++a) {
          const auto cell = static_cast<std::size_t>(rest % n);
          rest /= n;
          point[static_cast<std::size_t>(a)] = box.grid.edges[cell] + rng.uniform() * box.grid.width(cell);
        }
        if ((*condition)(point)) ++hits;
      }
      m *= static_cast<double>(hits) / samples;
    }
    d.values[static_cast<std::size_t>((i / stride) % n)] += m;
  }
  for (std::size_t c = 0; c < d.values.size(); ++c) d.values[c] /= d.width(c);
  return d;
}

BoxPredicate index_event(const BoxModel& box, int q, int target, int k,
                         const std::vector<std::pair<int, int>>& excluded) {
  auto require = [&](int site) {
    if (box.axis_of(site) < 0)
      throw ModeError("index event references site " + std::to_string(site) + " outside the box");
  };
  require(q);
  require(target);
  for (const auto& [j, site] : excluded) {
    require(site);
    if (j < 0 || j > k) throw DomainError("index event: excluded time outside [0, k]");
  }
  const CollisionScheme* scheme = box.scheme;
  const std::vector<int> sites = box.sites;
  return [=](const std::vector<double>& point) {
    // Off-box sites sit at 0, outside every zone.
    LatticeState state = LatticeState::constant(*scheme, 0.0);
    for (std::size_t a = 0; a < sites.size(); ++a) state.x[sites[a]] = point[a];
    const auto path = index_path(state, q, k, IndexVariant::psi);
    if (path[static_cast<std::size_t>(k)] != target) return false;
    for (const auto& [j, site] : excluded)
      if (path[static_cast<std::size_t>(j)] == site) return false;
    return true;
  };
}

CollisionScheme with_delta(const CollisionScheme& scheme, double delta) {
  SchemeParams p = scheme.params();
  p.delta = delta;
  return {scheme.map(), p};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

GapDiagnostics operator_gap_diagnostics(const CollisionScheme& scheme, BoxShape shape,
                                        std::size_t n, const std::vector<double>& deltas) {
  if (deltas.size() < 3) throw DomainError("gap diagnostics need at least three deltas");
  GapDiagnostics out;
  std::vector<double> ds, tv, mass;
  for (double delta : deltas) {
    const CollisionScheme s = with_delta(scheme, delta);
    const BoxModel box = make_box(s, shape, n, Dynamics::decoupled);
    const RealOperator closed(box, OperatorKind::closed);
    const RealOperator open(box, OperatorKind::open);
    const auto cells = static_cast<Eigen::Index>(box.grid.size());
    Eigen::VectorXd lebesgue(box.cell_count());
    for (Eigen::Index i = 0; i < lebesgue.size(); ++i) {
      Eigen::Index rest = i;
      double vol = 1.0;
      for (int a = 0; a < box.axes(); ++a) {
        vol *= box.grid.width(static_cast<std::size_t>(rest % cells));
        rest /= cells;
      }
      lebesgue[i] = vol;
    }
    Eigen::VectorXd a, b;
    closed.apply(lebesgue, a);
    open.apply(lebesgue, b);
    const Eigen::VectorXd diff = a - b;
    GapRow row{delta, diff.lpNorm<1>(), diff.sum()};
    out.rows.push_back(row);
    ds.push_back(delta);
    tv.push_back(row.tv_difference);
    mass.push_back(row.mass_difference);
  }
  out.tv_slope = loglog_slope(ds, tv);
  out.mass_slope = loglog_slope(ds, mass);
  return out;
}

}  // namespace collab
