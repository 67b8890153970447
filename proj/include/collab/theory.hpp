#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "collab/lattice.hpp"
#include "collab/rare_events.hpp"

namespace collab {

/// Exact tau^j(point) for j = 0..k_max (k_max <= 10^4).
std::vector<Rational> exact_orbit(const PiecewiseExpandingMap& map, const Rational& point, int k_max);

enum class RecurrenceKind { s_rec, s_tilde_rec };

/// A return of the pair (a_v, a_{-v}) onto (a_{v'}, a_{-v'}) after `lag`
/// steps whose index bookkeeping can carry the neighbour to the right site.
struct RecurrenceRecord {
  int v = 0;
  int v_prime = 0;
  int lag = 0;
  RecurrenceKind kind = RecurrenceKind::s_rec;
  int target_site = 0;     // p*+v' (S^rec) or p*-v' (S~^rec)
  std::vector<int> j_set;  // earlier S^rec lags of the same channel, all < lag
};

/// One term of the extremal-index sum: k with tau^{k+1}(a_v, a_{-v}) = (a_{v'}, a_{-v'}).
struct KTerm {
  int v = 0;
  int v_prime = 0;
  int k = 0;
  std::vector<std::pair<int, int>> j_set;  // (j, w_j) with 1 <= j < k
  bool target_reachable = false;           // Psi can carry p*+v to p*+v'
};

struct RecurrenceReport {
  std::vector<RecurrenceRecord> records;
  std::vector<int> s_rec;        // channels v with (a_v, a_{-v}) in S^rec
  std::vector<int> s_tilde_rec;  // channels v in S~^rec
  std::vector<KTerm> k_terms;    // terms for channels in S^rec, k in [0, k_max - 1]
  std::vector<KTerm> k_tilde_terms;  // terms for channels in S^rec or S~^rec
  int k_max = 0;
  bool exact = true;     // rational orbits (else float orbits, tolerance 1e-9)
  bool periodic = true;  // every center orbit closed a cycle within k_max
  std::vector<std::string> notes;
};

RecurrenceReport detect_recurrence(const CollisionScheme& scheme, int k_max = 200);

/// Density values entering q_k.
struct DensityInputs {
  std::function<double(double)> rho_tau;  // rho_tau at a point
  /// rho_{eps,q}(a^+) and rho_{eps,q}(a^-) for the neighbour of channel v at a = a_{-v}.
  std::function<std::pair<double, double>(int v)> neighbor_limits;
  /// rho_hat_{eps,Lambda,k}(a_{-v}^+/-) for a term.
  std::function<std::pair<double, double>(const KTerm&)> conditioned_limits;
  /// Every density is the constant 1 and the indicator is exact: rational mode.
  bool unit = false;
  std::string mode = "idealized";
};

/// Idealized inputs: rho_{eps,q} := rho_tau, conditioned marginal from index
/// bookkeeping with the neighbour held at its site.
DensityInputs idealized_densities(const CollisionScheme& scheme);

/// Estimated inputs from the closed decoupled Ulam box (pair box, or triple box
/// for d = 1): marginals for rho_{eps,q}, index-conditioned marginals for rho_hat.
/// Index paths are followed up to lag `k_cap`; longer terms are dropped.
DensityInputs estimated_densities(const CollisionScheme& scheme, std::size_t grid_size,
                                  int samples = 16, int k_cap = 40);

struct QValue {
  double value = 0.0;
  std::optional<Rational> exact;
};

QValue q_k_value(const CollisionScheme& scheme, const KTerm& term, const DensityInputs& densities);

struct ThetaValue {
  double theta = 1.0;             // headline: k >= 1 with J_k = {1 <= j < k}
  double theta_k0 = 1.0;          // same terms with k >= 0 included
  double theta_first_return = 1.0;  // k >= 0 and J_k = {0 <= j < k}, lag 0 counted as a return
  std::optional<Rational> exact, exact_k0, exact_first_return;
  int truncation = 0;
  double tail_bound = 0.0;        // alpha^{-2N}
  std::vector<std::tuple<int, int, int, double>> q_table;  // (v, v', k, q_k), headline convention
  std::vector<std::string> notes;
};

ThetaValue theta_value(const CollisionScheme& scheme, const RecurrenceReport& rec,
                       const DensityInputs& densities, int truncation = 200);

/// 1 - sum of the given terms (exact when every term is).
QValue theta_from_q(const std::vector<QValue>& terms);

/// beta_k^{(1)}(j), beta_k^{(2)}(j) per (v, v', k).
/// Key (-1, -1, k) holds estimates aggregated over all channels.
struct BetaTable {
  using Key = std::tuple<int, int, int>;
  std::map<Key, std::vector<std::pair<double, double>>> entries;
  std::map<Key, std::vector<std::pair<double, double>>> stderrs;  // empty for closed forms
  std::vector<std::string> notes;
};

/// Closed-form betas where they are known: beta^{(1)}_k(0) = q_k,
/// beta^{(1)}_k(j >= 1) = 0, and beta^{(2)} = 0 when S~^rec is empty.
/// Throws SpecificationError when S~^rec is non-empty (estimate them instead).
BetaTable closed_form_betas(const CollisionScheme& scheme, const RecurrenceReport& rec,
                            const DensityInputs& densities);

struct ThetaTildePoint {
  double s = 0.0;
  std::complex<double> theta_tilde;
  std::complex<double> phi_x;
};

/// Monte Carlo betas for k = 1..k_max, j = 0..k, aggregated over channels.
BetaTable estimated_betas(const CollisionScheme& scheme, int k_max, std::size_t n_starts,
                          const RngSpec& rng);

/// Throws DomainError when some k has sum_j (beta1 + beta2) > 1.
std::vector<ThetaTildePoint> theta_tilde_value(const RecurrenceReport& rec, const BetaTable& betas,
                                               double theta, const std::vector<double>& s_grid);

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SpectralTheta {
  double delta = 0.0;
  double lambda = 0.0;
  double mu_hole = 0.0;
  double theta_spec = 0.0;  // (1 - lambda) / mu_hole
};

struct ThetaReport {
  std::string map;
  RecurrenceReport recurrence;
  ThetaValue theta;
  std::vector<ThetaTildePoint> tilde;
  std::vector<SpectralTheta> spectral;
  std::vector<Assertion> assertions;
  bool passed() const;
};

/// theta_spec per delta from the open triple box (d = 1, isolated mode).
std::vector<SpectralTheta> spectral_theta(const CollisionScheme& scheme,
                                          const std::vector<double>& deltas, std::size_t grid_size);

/// Parameters of the worked example: d = 1, tau = 5x mod 1, a_{+1} = 1/2,
/// a_{-1} = 1/4, isolated neighbourhood.
SchemeParams example_scheme_params(double delta = 0.01);

/// Full report for the worked example with its assertions; spectral theta at
/// delta in {0.02, 0.01, 0.005} when `with_spectral`.
ThetaReport example_report(bool with_spectral = true, std::size_t grid_size = 20);

}  // namespace collab
