#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "collab/interval_map.hpp"

namespace collab {

/// Which collision channels are active on the torus.
///  - full_lattice: every neighbouring pair may swap.
///  - isolated_neighborhood: only the 2d pairs containing the focal site.
///  - disabled: no zones at all (no swaps, empty hole).
enum class LatticeMode { full_lattice, isolated_neighborhood, disabled };

enum class Dynamics {
  full,             // T_{eps,delta}: all active swaps, focal pairs with width delta
  product,          // T_0: no swaps
  decoupled,        // T_{eps,p*}: swaps involving p* suppressed
  decoupled_pair,   // T_{eps,p*,q}: swaps involving p* or q suppressed
};

struct DynamicsSpec {
  Dynamics kind = Dynamics::full;
  int extra_site = -1;  // q for decoupled_pair
};

/// Plain configuration data for a collision scheme. Direction ids are
/// 0 -> +e1, 1 -> -e1, 2 -> +e2, 3 -> -e2, ...
struct SchemeParams {
  int dimension = 1;
  int side = 9;
  std::vector<double> centers;  // one per direction id
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<int> focal_site;  // lattice coordinates, default origin
  LatticeMode mode = LatticeMode::isolated_neighborhood;
};

/// Validated collision scheme on a finite torus together with its site map.
class CollisionScheme {
 public:
  CollisionScheme(PiecewiseExpandingMap map, SchemeParams params);

  const PiecewiseExpandingMap& map() const { return map_; }
  const SchemeParams& params() const { return params_; }
  int dimension() const { return params_.dimension; }
  int side() const { return params_.side; }
  int site_count() const { return site_count_; }
  int direction_count() const { return 2 * params_.dimension; }
  int focal() const { return focal_; }
  LatticeMode mode() const { return params_.mode; }
  double epsilon() const { return params_.epsilon; }
  double delta() const { return params_.delta; }
  double center(int v) const { return params_.centers[static_cast<std::size_t>(v)]; }

  /// Exact centers and widths when every one of them is a short rational.
  bool exact() const { return exact_; }
  const Rational& exact_center(int v) const { return exact_centers_[static_cast<std::size_t>(v)]; }
  const Rational& exact_epsilon() const { return exact_epsilon_; }
  const Rational& exact_delta() const { return exact_delta_; }

  static int opposite(int v) { return v ^ 1; }
  static int axis(int v) { return v / 2; }
  static int sign(int v) { return v % 2 == 0 ? 1 : -1; }
  static std::string label(int v);
  /// Parses "+1", "-2", ... into a direction id.
  static int parse_label(const std::string& label, int dimension);

  int neighbor(int site, int v) const {
    return neighbors_[static_cast<std::size_t>(site * direction_count() + v)];
  }
  std::vector<int> coordinates(int site) const;
  int site_index(const std::vector<int>& coords) const;

  /// Zone A_{w,v} = [a_v - w/2, a_v + w/2).
  double zone_lo(int v, bool focal_width) const {
    return (focal_width ? delta_lo_ : eps_lo_)[static_cast<std::size_t>(v)];
  }
  double zone_hi(int v, bool focal_width) const {
    return (focal_width ? delta_hi_ : eps_hi_)[static_cast<std::size_t>(v)];
  }
  bool in_zone(double x, int v, bool focal_width) const {
    return x >= zone_lo(v, focal_width) && x < zone_hi(v, focal_width);
  }

  /// Lebesgue measure of H_delta(p*): 2d * delta^2 (zero when disabled).
  double hole_lebesgue_measure() const;

 private:
  PiecewiseExpandingMap map_;
  SchemeParams params_;
  int site_count_ = 0;
  int focal_ = 0;
  std::vector<int> neighbors_;
  std::vector<double> eps_lo_, eps_hi_, delta_lo_, delta_hi_;
  bool exact_ = false;
  std::vector<Rational> exact_centers_;
  Rational exact_epsilon_, exact_delta_;
};

/// A point of I^Lambda on the torus.
struct LatticeState {
  const CollisionScheme* scheme = nullptr;
  Eigen::ArrayXd x;

  LatticeState() = default;
  LatticeState(const CollisionScheme& s, Eigen::ArrayXd coords);
  static LatticeState constant(const CollisionScheme& s, double value);
};

/// A swap of the coordinates at `site` and its neighbour in `direction`.
struct SwapEvent {
  long step = 0;
  int site = 0;
  int direction = 0;
  bool focal = false;
};

struct CollisionPair {
  int site = 0;       // lower site index of the pair
  int direction = 0;  // direction from `site` to its partner
  bool focal = false;
};

/// Pairs that swap under the given dynamics (mode and variant filters applied).
std::vector<CollisionPair> collision_pairs(const LatticeState& state,
                                           DynamicsSpec dynamics = {Dynamics::full});

/// One step: swap stage then tau at every site. Appends executed swaps to
/// `events` (with step number `n`) when given.
LatticeState step(const LatticeState& state, DynamicsSpec dynamics,
                  std::vector<SwapEvent>* events = nullptr, long n = 0);
void advance(LatticeState& state, DynamicsSpec dynamics, std::vector<SwapEvent>* events = nullptr,
             long n = 0);

bool in_hole(const LatticeState& state);

/// Least n in [0, horizon] with T^n(state) in H_delta, if any.
std::optional<long> first_hit(const LatticeState& state, long horizon, DynamicsSpec dynamics);

enum class IndexVariant { psi, psi_tilde };

/// Site carrying the coordinate started at `p` after k steps. psi follows the
/// decoupled dynamics, psi_tilde the full dynamics.
int index_map(const LatticeState& state, int p, int k, IndexVariant variant);

/// The whole index path Psi_0 .. Psi_k together with the final state.
std::vector<int> index_path(const LatticeState& state, int p, int k, IndexVariant variant,
                            LatticeState* final_state = nullptr);

}  // namespace collab
