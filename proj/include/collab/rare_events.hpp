#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "collab/lattice.hpp"
#include "collab/rng.hpp"
#include "collab/statistics.hpp"

namespace collab {

enum class InitKind { lebesgue, invariant };

struct InitSpec {
  InitKind kind = InitKind::lebesgue;
  long burn_in = 1000;  // decoupled steps for the invariant initialization
};

/// Run-wide sampling controls. Trajectory i draws from
/// SplitMix64::substream(seed, i) whatever the worker count.
struct RngSpec {
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Fast stepping of the sites that matter for collisions at p*. In
/// isolated_neighborhood and disabled modes only p* and its 2d neighbours are
/// tracked (slot 0 is p*, slot 1 + v is p* + v); in full_lattice mode the whole
/// torus is.
class FocalSimulator {
 public:
  explicit FocalSimulator(const CollisionScheme& scheme);

  int slots() const { return slots_; }
  const CollisionScheme& scheme() const { return *scheme_; }

  void draw_lebesgue(SplitMix64& rng, Eigen::ArrayXd& x) const;
  void initialize(SplitMix64& rng, const InitSpec& init, Eigen::ArrayXd& x) const;
  bool in_hole(const Eigen::ArrayXd& x) const;
  /// One step of the full (swap at p* allowed) or decoupled dynamics.
  void step(Eigen::ArrayXd& x, bool full) const;
  /// Least n in [0, horizon] with the orbit in H, else -1.
  long first_hit(Eigen::ArrayXd x, long horizon, bool full) const;
  /// Channel v with x_{p*} in A_{delta,v} and x_{p*+v} in A_{delta,-v}, else -1.
  int hole_channel(const Eigen::ArrayXd& x) const;

  int focal_slot() const { return local_ ? 0 : scheme_->focal(); }
  int neighbor_slot(int v) const {
    return local_ ? 1 + v : scheme_->neighbor(scheme_->focal(), v);
  }

 private:
  const CollisionScheme* scheme_;
  bool local_;
  int slots_;
  int beta_;
  double dlo_[6], dhi_[6];
};

struct SurvivalCurve {
  std::vector<double> fraction;  // index n: fraction with first hit > n
  std::vector<double> stderr_;   // binomial standard error per n
  std::size_t trajectories = 0;
  /// Survivor fractions per batch of consecutive trajectories (for batch means).
  std::vector<std::vector<double>> batches;
};

struct HittingSample {
  std::vector<long> times;       // hitting time, or the horizon when censored
  std::vector<bool> censored;
  long horizon = 0;
  InitSpec init;
  std::vector<std::string> warnings;

  std::size_t censored_count() const;
  std::vector<double> uncensored() const;
};

struct EscapeFit {
  double rate = 0.0;
  double r2 = 1.0;
  double stderr_ = 0.0;
  long n0 = 0, n1 = 0;
};

struct CountingSample {
  std::vector<long> z;                       // Z_delta(t) per trajectory
  std::vector<std::vector<long>> clusters;   // cluster sizes per trajectory
  long horizon = 0;
  double t = 0.0;
  double mu_hat = 0.0;
  long gap = 0;

  double mean_z() const;
  /// Fraction of clusters of size one (1 when there are none).
  double singleton_fraction() const;
};

struct CfPoint {
  double s = 0.0;
  std::complex<double> value;
  std::complex<double> lower, upper;  // componentwise bootstrap percentile interval
};

struct BetaEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t starts = 0;
  bool approximate = false;  // product-density start measure off the isolated box
};

struct MassRow {
  double delta = 0.0;
  double direct = 0.0;
  double formula = 0.0;
  double ratio = 0.0;  // direct / formula (1 when both vanish)
};

struct NegligibilityResult {
  std::size_t returns = 0;
  std::size_t moved = 0;
  double fraction() const { return returns ? static_cast<double>(moved) / returns : 0.0; }
};

SurvivalCurve estimate_survival(const CollisionScheme& scheme, std::size_t n_traj, long horizon,
                                const RngSpec& rng, std::size_t batches = 20);

/// Survival curve built from a hitting sample: fraction(n) = P(t > n).
SurvivalCurve survival_from_hits(const HittingSample& sample, std::size_t batches = 20);

EscapeFit fit_escape_rate(const SurvivalCurve& curve, long n0, long n1,
                          std::size_t min_survivors = 1000);

HittingSample sample_hitting_times(const CollisionScheme& scheme, std::size_t n_traj, long horizon,
                                   const InitSpec& init, const RngSpec& rng);

CountingSample count_collisions(const CollisionScheme& scheme, double t, double mu_hat,
                                std::size_t n_traj, long gap, const InitSpec& init,
                                const RngSpec& rng);

/// Splits ascending hit times into clusters separated by more than `gap` steps.
std::vector<long> cluster_sizes(const std::vector<long>& hit_times, long gap);

std::vector<CfPoint> empirical_cf(const std::vector<long>& z, const std::vector<double>& s_grid,
                                  int bootstrap = 200, std::uint64_t seed = 1);

/// exp(-(1 - e^{is}) * intensity * t).
std::complex<double> poisson_cf(double s, double intensity, double t);

BetaEstimate estimate_beta(const CollisionScheme& scheme, int k, int j, int variant,
                           std::size_t n_starts, const RngSpec& rng);

enum class DensitySource { ulam, histogram };

std::vector<MassRow> mass_asymptotics_check(const CollisionScheme& scheme,
                                            const std::vector<double>& deltas, DensitySource source,
                                            std::size_t grid_size, std::size_t n_traj, long steps,
                                            const RngSpec& rng);

/// Returns to H within k_max steps of the decoupled dynamics from starts in H,
/// and how many of them carry an index Psi_k^{p*+v} different from p*+v'.
NegligibilityResult index_negligibility(const CollisionScheme& scheme, int k_max,
                                        std::size_t n_starts, const RngSpec& rng);

}  // namespace collab
