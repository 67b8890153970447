#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "collab/rational.hpp"

namespace collab {

/// Affine branch x -> slope * x + offset, reduced mod 1.
struct AffineBranch {
  Rational slope;
  Rational offset;
};

/// C^2 branch given by an unreduced value function and its derivative.
struct SmoothBranch {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

using Branch = std::variant<AffineBranch, SmoothBranch>;

/// Piecewise onto, uniformly expanding map of [0,1).
///
/// Branch i acts on the half-open interval [points[i], points[i+1]) and maps it
/// monotonically onto [0,1) after reduction mod 1. Construction validates the
/// branch structure and computes the expansion factor alpha = inf |tau'|.
class PiecewiseExpandingMap {
 public:
  PiecewiseExpandingMap(std::vector<Rational> points, std::vector<Branch> branches);

  /// tau(x) = beta * x mod 1.
  static PiecewiseExpandingMap mod_beta(int beta);
  static PiecewiseExpandingMap affine_branches(std::vector<Rational> points,
                                               std::vector<Rational> slopes,
                                               std::vector<Rational> offsets);
  /// tau(x) = beta x + (amplitude / 2 pi) sin(2 pi beta x) mod 1; a smooth
  /// full-branch map with a non-uniform invariant density.
  static PiecewiseExpandingMap sine_perturbed(int beta, double amplitude);

  std::size_t branch_count() const { return branches_.size(); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<Rational>& exact_points() const { return exact_points_; }
  const Branch& branch(std::size_t i) const { return branches_[i]; }
  double expansion_factor() const { return alpha_; }

  /// All branches affine with rational data.
  bool is_rational_affine() const { return rational_affine_; }
  /// Integer beta if this is beta x mod 1, otherwise 0.
  int uniform_beta() const { return beta_; }

  /// Index of the branch whose half-open interval contains x.
  std::size_t branch_index(double x) const;
  std::size_t branch_index(const Rational& x) const;

  /// Integer shift n such that branch i maps its interval onto [n, n+1].
  long image_shift(std::size_t i) const { return shifts_[i]; }

  std::string describe() const;

 private:
  std::vector<double> points_;
  std::vector<Rational> exact_points_;
  std::vector<Branch> branches_;
  std::vector<long> shifts_;
  double alpha_ = 0.0;
  bool rational_affine_ = false;
  int beta_ = 0;
};

/// Piecewise-constant density on a partition of [0,1).
struct DensityEstimate {
  std::vector<double> edges;   // size bins + 1, edges.front() == 0, edges.back() == 1
  std::vector<double> values;  // bin-averaged density

  static DensityEstimate uniform_grid(std::size_t n);

  std::size_t size() const { return values.size(); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  std::size_t bin_of(double x) const;
  double at(double x) const { return values[bin_of(x)]; }
  /// rho(a+): the bin to the right of a (the bin containing a).
  double right_limit(double a) const;
  /// rho(a-): the bin to the left of a.
  double left_limit(double a) const;
  double total_mass() const;
  double l1_distance(const DensityEstimate& other) const;
};

struct InvariantDensity {
  DensityEstimate density;
  double eigenvalue = 0.0;
  int iterations = 0;
};

/// tau(x) on the containing branch, reduced into [0,1).
double eval_map(const PiecewiseExpandingMap& map, double x);

/// Exact tau(x) for rational-affine maps.
Rational eval_map(const PiecewiseExpandingMap& map, const Rational& x);

/// tau'(x); throws SingularityError at interior branch endpoints.
double deriv_map(const PiecewiseExpandingMap& map, double x);

/// (tau^n)'(x) by the chain rule along the float orbit.
double deriv_iterate(const PiecewiseExpandingMap& map, double x, int n);

/// Exact (tau^n)'(x) for rational-affine maps.
Rational deriv_iterate(const PiecewiseExpandingMap& map, const Rational& x, int n);

/// Row-stochastic Ulam matrix on the given partition (row = source cell).
/// Transition fractions are exact for affine branches; smooth branches are
/// sampled with `samples_per_cell` stratified points.
Eigen::SparseMatrix<double, Eigen::RowMajor> ulam_matrix_1d(
    const PiecewiseExpandingMap& map, const std::vector<double>& edges,
    int samples_per_cell = 10000);

/// Fixed density of the 1D Ulam matrix on a uniform grid of n bins.
InvariantDensity invariant_density(const PiecewiseExpandingMap& map, std::size_t n);

}  // namespace collab
