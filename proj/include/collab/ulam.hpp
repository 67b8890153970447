#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "collab/lattice.hpp"
#include "collab/power_iteration.hpp"

namespace collab {

/// Partition of [0,1) shared by every axis of a box.
struct Grid1D {
  std::vector<double> edges;
  std::vector<Rational> exact_edges;  // empty unless built from exact data
  bool markov = false;                // cell images are unions of cells

  std::size_t size() const { return edges.size() - 1; }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  std::size_t bin_of(double x) const;

  static Grid1D uniform(std::size_t n);
  /// Uniform grid of n cells refined by `extra` points, the branch endpoints of
  /// the map and the forward orbits of all of these, so that the partition is
  /// Markov and every extra point is an edge. Needs a rational-affine map.
  /// Throws ResolutionError when the closure exceeds `max_cells`.
  static Grid1D markov_refined(const PiecewiseExpandingMap& map, std::size_t n,
                               const std::vector<Rational>& extra, std::size_t max_cells = 4096);
};

enum class BoxShape { pair, triple };

/// Finite site-box around p* on which the Ulam operators act.
struct BoxModel {
  struct Channel {
    int focal_axis = 0;    // axis of p* inside the box
    int partner_axis = 0;  // axis of p* + v
    int direction = 0;     // v
  };
  const CollisionScheme* scheme = nullptr;
  std::vector<int> sites;  // lattice sites, one per axis
  Grid1D grid;
  Dynamics variant = Dynamics::decoupled;
  std::vector<Channel> channels;
  /// Per channel: overlap fraction of each grid cell with A_{delta,v} (focal
  /// axis) and with A_{delta,-v} (partner axis).
  std::vector<Eigen::ArrayXd> focal_overlap, partner_overlap;

  int axes() const { return static_cast<int>(sites.size()); }
  std::size_t cells_per_axis() const { return grid.size(); }
  Eigen::Index cell_count() const;
  int axis_of(int site) const;  // -1 if not in the box

  /// Per-cell overlap fraction with channel c of H_delta and with the whole hole.
  Eigen::ArrayXd channel_fraction(std::size_t c) const;
  Eigen::ArrayXd hole_fraction() const;
};

/// Builds the box: pair = (p*, p*+e1), triple = (p*-e1, p*, p*+e1) (d = 1 only).
/// With `refine` the grid is Markov-refined by the zone endpoints (exact
/// schemes with rational-affine maps); otherwise it is uniform with N cells.
BoxModel make_box(const CollisionScheme& scheme, BoxShape shape, std::size_t n, Dynamics variant,
                  bool refine = true);

enum class OperatorKind { closed, open, twisted };

/// Ulam discretization of the box transfer operator acting on cell masses
/// (row vectors). Stored in structured form: per-cell weights, the swap
/// permutation of the focal channels, then the 1D Ulam matrix on every axis.
template <typename Scalar>
class TransferOperator {
 public:
  TransferOperator(const BoxModel& box, OperatorKind kind, double s = 0.0);

  Eigen::Index dimension() const { return box_->cell_count(); }
  OperatorKind kind() const { return kind_; }
  double twist() const { return s_; }
  const BoxModel& box() const { return *box_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& axis_matrix() const { return P_; }

  /// out = in * A.
  void apply(const Vector<Scalar>& in, Vector<Scalar>& out) const;
  /// A * 1.
  Vector<Scalar> row_sums() const;
  /// Explicit sparse matrix (row = source cell); only for small boxes.
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> to_sparse(Eigen::Index max_dimension = 200000) const;

 private:
  void kron_apply(Vector<Scalar>& v, Vector<Scalar>& tmp) const;

  const BoxModel* box_;
  OperatorKind kind_;
  double s_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> P_;
  struct Swap {
    Eigen::Index from, to;
    Scalar weight;
  };
  Vector<Scalar> stay_;      // weight kept in place
  std::vector<Swap> swaps_;  // weight moved to the transposed cell
};

using RealOperator = TransferOperator<double>;
using ComplexOperator = TransferOperator<std::complex<double>>;

template <typename Scalar>
struct SpectralResult {
  Scalar lambda{};
  double modulus = 0.0;
  double phase = 0.0;
  Vector<Scalar> vector;  // eigen-mass over cells, unit L1 norm
  int iterations = 0;
  double residual = 0.0;
  double escape_rate = 0.0;  // -ln |lambda|
};

template <typename Scalar>
SpectralResult<Scalar> leading_eigen(const TransferOperator<Scalar>& op, double tolerance = 1e-12,
                                     int max_iterations = 100000);

/// Dominant eigenvalue of the 1D Ulam operator of `map` on `grid`, opened by
/// the hole [hole_lo, hole_hi) with exact overlap weighting (no hole when
/// hole_hi <= hole_lo).
SpectralResult<double> interval_eigen(const PiecewiseExpandingMap& map, const Grid1D& grid,
                                      double hole_lo = 0.0, double hole_hi = 0.0,
                                      double tolerance = 1e-12, int max_iterations = 100000);

/// Predicate on a point of the box (one coordinate per box axis).
using BoxPredicate = std::function<bool(const std::vector<double>&)>;

/// Marginal density of an eigen-mass on one box axis. With a predicate the
/// mass of each cell is filtered by the fraction of `samples` random points of
/// the cell satisfying it.
DensityEstimate marginal_density(const Eigen::VectorXd& mass, const BoxModel& box, int axis,
                                 const BoxPredicate* condition = nullptr, int samples = 16,
                                 std::uint64_t seed = 1);

/// The index event {Psi_k^q = target} minus {Psi_j^q = site_j} for the given
/// earlier (j, site_j), evaluated by running the decoupled dynamics from a
/// lattice state whose box sites carry the point. Throws ModeError when a
/// referenced site lies outside the box.
BoxPredicate index_event(const BoxModel& box, int q, int target, int k,
                         const std::vector<std::pair<int, int>>& excluded);

struct GapRow {
  double delta = 0.0;
  double tv_difference = 0.0;  // |(L - L_hat) m|_TV for uniform m
  double mass_difference = 0.0;  // Delta_delta
};

struct GapDiagnostics {
  std::vector<GapRow> rows;
  double tv_slope = 0.0;    // log-log slope of tv_difference vs delta
  double mass_slope = 0.0;
};

GapDiagnostics operator_gap_diagnostics(const CollisionScheme& scheme, BoxShape shape,
                                        std::size_t n, const std::vector<double>& deltas);

/// Copy of a scheme with a different focal width.
CollisionScheme with_delta(const CollisionScheme& scheme, double delta);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace collab
