#include "collab/interval_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "collab/errors.hpp"
#include "collab/power_iteration.hpp"

namespace collab {

namespace {

constexpr double kTorusClamp = 1e-15;
constexpr double kOntoTolerance = 1e-12;
constexpr double kSnap = 1e-13;

double reduce_mod1(double y) {
  double r = y - std::floor(y);
  if (r >= 1.0 - kTorusClamp) r = 0.0;
  return r;
}

bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

}  // namespace

std::optional<Rational> parse_rational(const std::string& raw) {
  std::string text;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  if (text.empty()) return std::nullopt;
  try {
    if (auto slash = text.find('/'); slash != std::string::npos) {
      boost::multiprecision::cpp_int p(text.substr(0, slash));
      boost::multiprecision::cpp_int q(text.substr(slash + 1));
      if (q == 0) return std::nullopt;
      return Rational(p, q);
    }
    bool negative = false;
    std::size_t pos = 0;
    if (text[0] == '-' || text[0] == '+') {
      negative = text[0] == '-';
      pos = 1;
    }
    std::string digits;
    long scale = 0;
    bool seen_dot = false;
    for (; pos < text.size(); ++pos) {
      char c = text[pos];
      if (c == '.') {
        if (seen_dot) return std::nullopt;
        seen_dot = true;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        digits.push_back(c);
        if (seen_dot) ++scale;
      } else {
        return std::nullopt;
      }
    }
    if (digits.empty()) return std::nullopt;
    boost::multiprecision::cpp_int num(digits);
    boost::multiprecision::cpp_int den = boost::multiprecision::pow(
        boost::multiprecision::cpp_int(10), static_cast<unsigned>(scale));
    Rational r(num, den);
    return negative ? Rational(-r) : r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<Rational> rational_from_double(double x, long long max_den, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  // Continued-fraction convergents.
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double rem = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(rem);
    if (std::abs(a) > 9e15) break;
    const auto ai = static_cast<long long>(a);
    const long long h2 = ai * h1 + h0;
    const long long k2 = ai * k1 + k0;
    if (k2 > max_den || k2 <= 0) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) <= tol)
      return Rational(h1, k1);
    const double f = rem - a;
    if (f < 1e-18) break;
    rem = 1.0 / f;
  }
  return std::nullopt;
}

std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

PiecewiseExpandingMap::PiecewiseExpandingMap(std::vector<Rational> points,
                                             std::vector<Branch> branches)
    : exact_points_(std::move(points)), branches_(std::move(branches)) {
  if (branches_.empty() || exact_points_.size() != branches_.size() + 1)
    throw SpecificationError("map needs M branches and M+1 partition points");
  if (exact_points_.front() != 0 || exact_points_.back() != 1)
    throw SpecificationError("partition must start at 0 and end at 1");
  for (std::size_t i = 1; i < exact_points_.size(); ++i)
    if (!(exact_points_[i - 1] < exact_points_[i]))
      throw SpecificationError("partition points must be strictly increasing");

  points_.reserve(exact_points_.size());
  for (const auto& p : exact_points_) points_.push_back(to_double(p));

  rational_affine_ = true;
  alpha_ = std::numeric_limits<double>::infinity();
  shifts_.resize(branches_.size());
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    if (const auto* a = std::get_if<AffineBranch>(&branches_[i])) {
      const Rational y0 = a->slope * exact_points_[i] + a->offset;
      const Rational y1 = a->slope * exact_points_[i + 1] + a->offset;
      const Rational lo = y0 < y1 ? y0 : y1;
      const Rational span = y0 < y1 ? y1 - y0 : y0 - y1;
      if (span != 1 || !is_integer(lo))
        throw SpecificationError("affine branch " + std::to_string(i) +
                                 " is not onto [0,1) mod 1");
      shifts_[i] = lo.convert_to<long>();
      const double s = std::abs(to_double(a->slope));
      alpha_ = std::min(alpha_, s);
    } else {
      rational_affine_ = false;
      const auto& b = std::get<SmoothBranch>(branches_[i]);
      const double l = points_[i], r = points_[i + 1];
      const double y0 = b.value(l), y1 = b.value(r);
      const double lo = std::min(y0, y1);
      if (std::abs(std::abs(y1 - y0) - 1.0) > kOntoTolerance ||
          std::abs(lo - std::round(lo)) > kOntoTolerance)
        throw SpecificationError("branch '" + b.name + "' is not onto [0,1) mod 1");
      shifts_[i] = std::lround(lo);
      const int samples = 64;
      double sign = 0.0;
      for (int k = 0; k <= samples; ++k) {
        const double x = l + (r - l) * (k + 0.5) / (samples + 1);
        const double d = b.derivative(x);
        if (sign == 0.0) sign = d > 0 ? 1.0 : -1.0;
        if (d * sign <= 0) throw SpecificationError("branch '" + b.name + "' is not monotone");
        alpha_ = std::min(alpha_, std::abs(d));
      }
    }
  }
  if (!(alpha_ > 1.0)) throw SpecificationError("map is not uniformly expanding (alpha <= 1)");

  if (rational_affine_) {
    const auto& first = std::get<AffineBranch>(branches_[0]);
    if (is_integer(first.slope) && first.slope >= 2 && first.offset == 0 &&
        branches_.size() == static_cast<std::size_t>(first.slope.convert_to<long>())) {
      bool uniform = true;
      const long beta = first.slope.convert_to<long>();
      for (std::size_t i = 0; i < branches_.size() && uniform; ++i) {
        const auto& a = std::get<AffineBranch>(branches_[i]);
        uniform = a.slope == first.slope && a.offset == -Rational(static_cast<long>(i)) &&
                  exact_points_[i] == Rational(static_cast<long>(i), beta);
      }
      if (uniform) beta_ = static_cast<int>(beta);
    }
  }
}

PiecewiseExpandingMap PiecewiseExpandingMap::mod_beta(int beta) {
  if (beta < 2) throw SpecificationError("mod_beta needs integer beta >= 2");
  std::vector<Rational> points;
  std::vector<Branch> branches;
  for (int i = 0; i <= beta; ++i) points.emplace_back(i, beta);
  for (int i = 0; i < beta; ++i) branches.emplace_back(AffineBranch{Rational(beta), Rational(-i)});
  return {std::move(points), std::move(branches)};
}

PiecewiseExpandingMap PiecewiseExpandingMap::affine_branches(std::vector<Rational> points,
                                                             std::vector<Rational> slopes,
                                                             std::vector<Rational> offsets) {
  if (slopes.size() != offsets.size() || slopes.size() + 1 != points.size())
    throw SpecificationError("affine_branches: need len(points) = len(slopes) + 1 = len(offsets) + 1");
  std::vector<Branch> branches;
  for (std::size_t i = 0; i < slopes.size(); ++i)
    branches.emplace_back(AffineBranch{slopes[i], offsets[i]});
  return {std::move(points), std::move(branches)};
}

PiecewiseExpandingMap PiecewiseExpandingMap::sine_perturbed(int beta, double amplitude) {
  if (beta < 2) throw SpecificationError("sine_perturbed needs integer beta >= 2");
  if (!(std::abs(amplitude) < 1.0 - 1.0 / beta))
    throw SpecificationError("sine_perturbed amplitude must satisfy |a| < 1 - 1/beta");
  std::vector<Rational> points;
  std::vector<Branch> branches;
  const double b = beta;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i <= beta; ++i) points.emplace_back(i, beta);
  for (int i = 0; i < beta; ++i) {
    branches.emplace_back(SmoothBranch{
        "sine_perturbed",
        [=](double x) { return b * x + amplitude / two_pi * std::sin(two_pi * b * x); },
        [=](double x) { return b * (1.0 + amplitude * std::cos(two_pi * b * x)); }});
  }
  return {std::move(points), std::move(branches)};
}

std::size_t PiecewiseExpandingMap::branch_index(double x) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), x);
  auto idx = static_cast<std::ptrdiff_t>(it - points_.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(branches_.size()) - 1));
}

std::size_t PiecewiseExpandingMap::branch_index(const Rational& x) const {
  auto it = std::upper_bound(exact_points_.begin(), exact_points_.end(), x);
  auto idx = static_cast<std::ptrdiff_t>(it - exact_points_.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(branches_.size()) - 1));
}

std::string PiecewiseExpandingMap::describe() const {
  if (beta_ > 0) return std::to_string(beta_) + "x mod 1";
  if (rational_affine_) return "affine_branches(" + std::to_string(branches_.size()) + ")";
  return std::get<SmoothBranch>(branches_[0]).name;
}

double eval_map(const PiecewiseExpandingMap& map, double x) {
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("eval_map: x outside [0,1)");
  if (const int beta = map.uniform_beta()) return reduce_mod1(beta * x);
  const auto& b = map.branch(map.branch_index(x));
  if (const auto* a = std::get_if<AffineBranch>(&b))
    return reduce_mod1(to_double(a->slope) * x + to_double(a->offset));
  return reduce_mod1(std::get<SmoothBranch>(b).value(x));
}

Rational eval_map(const PiecewiseExpandingMap& map, const Rational& x) {
  if (!map.is_rational_affine()) throw NonRationalError("exact evaluation needs a rational-affine map");
  if (x < 0 || x >= 1) throw DomainError("eval_map: x outside [0,1)");
  const auto& a = std::get<AffineBranch>(map.branch(map.branch_index(x)));
  return frac(a.slope * x + a.offset);
}

double deriv_map(const PiecewiseExpandingMap& map, double x) {
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("deriv_map: x outside [0,1)");
  const auto& pts = map.points();
  for (std::size_t i = 1; i + 1 < pts.size(); ++i)
    if (x == pts[i]) throw SingularityError("deriv_map: x is a partition point");
  const auto& b = map.branch(map.branch_index(x));
  if (const auto* a = std::get_if<AffineBranch>(&b)) return to_double(a->slope);
  return std::get<SmoothBranch>(b).derivative(x);
}

double deriv_iterate(const PiecewiseExpandingMap& map, double x, int n) {
  double d = 1.0;
  for (int i = 0; i < n; ++i) {
    d *= deriv_map(map, x);
    x = eval_map(map, x);
  }
  return d;
}

Rational deriv_iterate(const PiecewiseExpandingMap& map, const Rational& x0, int n) {
  if (!map.is_rational_affine()) throw NonRationalError("exact derivative needs a rational-affine map");
  Rational d = 1;
  Rational x = x0;
  for (int i = 0; i < n; ++i) {
    d *= std::get<AffineBranch>(map.branch(map.branch_index(x))).slope;
    x = eval_map(map, x);
  }
  return d;
}

DensityEstimate DensityEstimate::uniform_grid(std::size_t n) {
  DensityEstimate d;
  d.edges.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) d.edges[i] = static_cast<double>(i) / static_cast<double>(n);
  d.values.assign(n, 1.0);
  return d;
}

std::size_t DensityEstimate::bin_of(double x) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto idx = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1));
}

double DensityEstimate::right_limit(double a) const { return values[bin_of(a)]; }

double DensityEstimate::left_limit(double a) const {
  const std::size_t j = bin_of(a);
  if (a == edges[j]) return values[j == 0 ? values.size() - 1 : j - 1];
  return values[j];
}

double DensityEstimate::total_mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * width(i);
  return m;
}

double DensityEstimate::l1_distance(const DensityEstimate& other) const {
  // Integrate |f - g| over the common refinement of both partitions.
  std::vector<double> cuts = edges;
  cuts.insert(cuts.end(), other.edges.begin(), other.edges.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    d += std::abs(at(mid) - other.at(mid)) * (cuts[i + 1] - cuts[i]);
  }
  return d;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> ulam_matrix_1d(const PiecewiseExpandingMap& map,
                                                            const std::vector<double>& edges,
                                                            int samples_per_cell) {
  const auto n = static_cast<Eigen::Index>(edges.size() - 1);
  auto bin_of = [&](double y) {
    auto it = std::upper_bound(edges.begin(), edges.end(), y);
    auto idx = static_cast<Eigen::Index>(it - edges.begin()) - 1;
    return std::clamp<Eigen::Index>(idx, 0, n - 1);
  };
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 8);
  const auto& pts = map.points();
  for (Eigen::Index c = 0; c < n; ++c) {
    const double l = edges[c], r = edges[c + 1];
    const double width = r - l;
    for (std::size_t i = 0; i < map.branch_count(); ++i) {
      const double u = std::max(l, pts[i]);
      const double w = std::min(r, pts[i + 1]);
      if (!(w > u)) continue;
      if (const auto* a = std::get_if<AffineBranch>(&map.branch(i))) {
        const double s = to_double(a->slope);
        const double off = to_double(a->offset) - static_cast<double>(map.image_shift(i));
        double lo = s * u + off, hi = s * w + off;
        if (lo > hi) std::swap(lo, hi);
        lo = std::clamp(lo, 0.0, 1.0);
        hi = std::clamp(hi, 0.0, 1.0);
        // Snap image endpoints onto grid edges so Markov partitions stay exact.
        auto snap = [&](double y) {
          const Eigen::Index j = bin_of(y);
          if (y - edges[j] < kSnap) return edges[j];
          if (edges[j + 1] - y < kSnap) return edges[j + 1];
          return y;
        };
        lo = snap(lo);
        hi = snap(hi);
        for (Eigen::Index j = bin_of(lo); j < n && edges[j] < hi; ++j) {
          const double ov = std::min(hi, edges[j + 1]) - std::max(lo, edges[j]);
          if (ov > 0) triplets.emplace_back(c, j, ov / (std::abs(s) * width));
        }
      } else {
        const auto& b = std::get<SmoothBranch>(map.branch(i));
        const double weight = 1.0 / static_cast<double>(samples_per_cell);
        const double step = width / samples_per_cell;
        for (int k = 0; k < samples_per_cell; ++k) {
          const double x = l + (k + 0.5) * step;
          if (x < u || x >= w) continue;
          triplets.emplace_back(c, bin_of(reduce_mod1(b.value(x))), weight);
        }
      }
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> P(n, n);
  P.setFromTriplets(triplets.begin(), triplets.end());
  P.makeCompressed();
  return P;
}

InvariantDensity invariant_density(const PiecewiseExpandingMap& map, std::size_t n) {
  if (n < 16) throw DomainError("invariant_density needs at least 16 bins");
  InvariantDensity out;
  out.density = DensityEstimate::uniform_grid(n);
  const auto P = ulam_matrix_1d(map, out.density.edges);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / n);
  Eigen::VectorXd w(v.size());
  constexpr int kMaxIterations = 100000;
  constexpr double kTolerance = 1e-12;
  for (int it = 1; it <= kMaxIterations; ++it) {
    w.noalias() = P.transpose() * v;
    const double mass = w.sum();
    out.eigenvalue = mass / v.sum();
    w /= mass;
    const double diff = (w - v).lpNorm<1>();
    v.swap(w);
    out.iterations = it;
    if (diff <= kTolerance) {
      for (std::size_t i = 0; i < n; ++i)
        out.density.values[i] = v[static_cast<Eigen::Index>(i)] / out.density.width(i);
      return out;
    }
  }
  throw ConvergenceError("invariant_density: Ulam iteration did not converge; check the map",
                         (w - v).lpNorm<1>(), kMaxIterations);
}

}  // namespace collab
