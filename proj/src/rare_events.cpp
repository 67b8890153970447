#include "collab/rare_events.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collab/errors.hpp"
#include "collab/parallel.hpp"
#include "collab/ulam.hpp"

namespace collab {

FocalSimulator::FocalSimulator(const CollisionScheme& scheme)
    : scheme_(&scheme),
      local_(scheme.mode() != LatticeMode::full_lattice),
      slots_(local_ ? 1 + scheme.direction_count() : scheme.site_count()),
      beta_(scheme.map().uniform_beta()) {
  for (int v = 0; v < scheme.direction_count(); ++v) {
    dlo_[v] = scheme.zone_lo(v, true);
    dhi_[v] = scheme.zone_hi(v, true);
  }
}

void FocalSimulator::draw_lebesgue(SplitMix64& rng, Eigen::ArrayXd& x) const {
  x.resize(slots_);
  for (int i = 0; i < slots_; ++i) x[i] = rng.uniform();
}

void FocalSimulator::initialize(SplitMix64& rng, const InitSpec& init, Eigen::ArrayXd& x) const {
  draw_lebesgue(rng, x);
  if (init.kind == InitKind::invariant)
    for (long b = 0; b < init.burn_in; ++b) step(x, false);
}

int FocalSimulator::hole_channel(const Eigen::ArrayXd& x) const {
  if (scheme_->mode() == LatticeMode::disabled) return -1;
  const int f = focal_slot();
  const double x0 = x[f];
  for (int v = 0; v < scheme_->direction_count(); ++v) {
    if (x0 >= dlo_[v] && x0 < dhi_[v]) {
      const double y = x[neighbor_slot(v)];
      const int w = CollisionScheme::opposite(v);
      return (y >= dlo_[w] && y < dhi_[w]) ? v : -1;  // x_{p*} lies in at most one zone
    }
  }
  return -1;
}

bool FocalSimulator::in_hole(const Eigen::ArrayXd& x) const { return hole_channel(x) >= 0; }

void FocalSimulator::step(Eigen::ArrayXd& x, bool full) const {
  if (!local_) {
    LatticeState st;
    st.scheme = scheme_;
    st.x.swap(x);
    advance(st, {full ? Dynamics::full : Dynamics::decoupled});
    x.swap(st.x);
    return;
  }
  if (full) {
    const int v = hole_channel(x);
    if (v >= 0) std::swap(x[0], x[1 + v]);
  }
  if (beta_ > 0) {
    const double b = beta_;
    for (int i = 0; i < slots_; ++i) {
      double y = b * x[i];
      y -= std::floor(y);
      x[i] = y >= 1.0 - 1e-15 ? 0.0 : y;
    }
  } else {
    for (int i = 0; i < slots_; ++i) x[i] = eval_map(scheme_->map(), x[i]);
  }
}

long FocalSimulator::first_hit(Eigen::ArrayXd x, long horizon, bool full) const {
  for (long n = 0;; ++n) {
    if (in_hole(x)) return n;
    if (n >= horizon) return -1;
    step(x, full);
  }
}

std::size_t HittingSample::censored_count() const {
  return static_cast<std::size_t>(std::count(censored.begin(), censored.end(), true));
}

std::vector<double> HittingSample::uncensored() const {
  std::vector<double> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!censored[i]) out.push_back(static_cast<double>(times[i]));
  return out;
}

double CountingSample::mean_z() const {
  if (z.empty()) return 0.0;
  return static_cast<double>(std::accumulate(z.begin(), z.end(), 0L)) / static_cast<double>(z.size());
}

double CountingSample::singleton_fraction() const {
  std::size_t total = 0, ones = 0;
  for (const auto& c : clusters) {
    total += c.size();
    ones += static_cast<std::size_t>(std::count(c.begin(), c.end(), 1L));
  }
  return total ? static_cast<double>(ones) / static_cast<double>(total) : 1.0;
}

namespace {

HittingSample run_hits(const CollisionScheme& scheme, std::size_t n_traj, long horizon,
                       const InitSpec& init, const RngSpec& rng, bool full, bool check_decoupled) {
  if (horizon < 0) throw DomainError("horizon must be non-negative");
  const FocalSimulator sim(scheme);
  HittingSample out;
  out.horizon = horizon;
  out.init = init;
  out.times.assign(n_traj, 0);
  std::vector<char> censored(n_traj, 0);
  parallel_for(n_traj, rng.workers, [&](std::size_t i) {
    auto gen = SplitMix64::substream(rng.seed, i);
    Eigen::ArrayXd x;
    sim.initialize(gen, init, x);
    const long t = sim.first_hit(x, horizon, full);
    if (check_decoupled && i % 100 == 0) {
      // Full and decoupled orbits coincide until the first collision at p*.
      if (sim.first_hit(x, horizon, !full) != t)
        throw Error("full and decoupled first hits disagree on trajectory " + std::to_string(i));
    }
    out.times[i] = t < 0 ? horizon : t;
    censored[i] = t < 0;
  });
  out.censored.assign(censored.begin(), censored.end());
  return out;
}

}  // namespace

SurvivalCurve survival_from_hits(const HittingSample& sample, std::size_t batches) {
  const std::size_t n = sample.times.size();
  const auto H = static_cast<std::size_t>(sample.horizon);
  SurvivalCurve c;
  c.trajectories = n;
  // hits[k] = uncensored hits at time k.
  auto tally = [&](std::size_t begin, std::size_t end) {
    std::vector<double> hits(H + 1, 0.0);
    for (std::size_t i = begin; i < end; ++i)
      if (!sample.censored[i]) hits[static_cast<std::size_t>(sample.times[i])] += 1.0;
    std::vector<double> frac(H + 1);
    double alive = static_cast<double>(end - begin);
    for (std::size_t k = 0; k <= H; ++k) {
      alive -= hits[k];
      frac[k] = end > begin ? alive / static_cast<double>(end - begin) : 0.0;
    }
    return frac;
  };
  c.fraction = tally(0, n);
  c.stderr_.resize(c.fraction.size());
  for (std::size_t k = 0; k < c.fraction.size(); ++k) {
    const double f = c.fraction[k];
    c.stderr_[k] = n ? std::sqrt(f * (1.0 - f) / static_cast<double>(n)) : 0.0;
  }
  if (batches >= 2 && n >= batches) {
    for (std::size_t b = 0; b < batches; ++b) c.batches.push_back(tally(b * n / batches, (b + 1) * n / batches));
  }
  return c;
}

SurvivalCurve estimate_survival(const CollisionScheme& scheme, std::size_t n_traj, long horizon,
                                const RngSpec& rng, std::size_t batches) {
  if (n_traj < 1000) throw SampleError("estimate_survival needs at least 1000 trajectories");
  const auto hits = run_hits(scheme, n_traj, horizon, {InitKind::lebesgue, 0}, rng, true, true);
  auto curve = survival_from_hits(hits, batches);
  if (curve.fraction.front() == 0.0)
    throw SampleError("every trajectory starts in the hole; delta is misconfigured");
  return curve;
}

EscapeFit fit_escape_rate(const SurvivalCurve& curve, long n0, long n1, std::size_t min_survivors) {
  const long last = static_cast<long>(curve.fraction.size()) - 1;
  if (n0 < 0 || n1 <= n0) throw DomainError("escape-rate window must satisfy 0 <= n0 < n1");
  n1 = std::min(n1, last);
  if (curve.trajectories > 0) {
    const double n = static_cast<double>(curve.trajectories);
    while (n1 > n0 + 2 && curve.fraction[static_cast<std::size_t>(n1)] * n < static_cast<double>(min_survivors))
      --n1;
    if (curve.fraction[static_cast<std::size_t>(n1)] * n < static_cast<double>(min_survivors))
      throw SampleError("fewer than " + std::to_string(min_survivors) + " survivors in the fit window");
  }
  if (n1 <= n0 + 1) throw SampleError("escape-rate window too short");

  auto fit = [&](const std::vector<double>& frac, double* r2) -> std::optional<double> {
    std::vector<double> xs, ys;
    for (long k = n0; k <= n1; ++k) {
      const double f = frac[static_cast<std::size_t>(k)];
      if (!(f > 0.0)) return std::nullopt;
      xs.push_back(static_cast<double>(k));
      ys.push_back(std::log(f));
    }
    const auto lf = least_squares(xs, ys);
    if (r2) *r2 = lf.r2;
    return -lf.slope;
  };

  EscapeFit out;
  out.n0 = n0;
  out.n1 = n1;
  auto rate = fit(curve.fraction, &out.r2);
  if (!rate) throw SampleError("survival curve reaches zero inside the window");
  out.rate = *rate;

  std::vector<double> batch_rates;
  for (const auto& b : curve.batches)
    if (auto r = fit(b, nullptr)) batch_rates.push_back(*r);
  if (batch_rates.size() >= 5) {
    const double m = std::accumulate(batch_rates.begin(), batch_rates.end(), 0.0) /
                     static_cast<double>(batch_rates.size());
    double ss = 0.0;
    for (double r : batch_rates) ss += (r - m) * (r - m);
    const double B = static_cast<double>(batch_rates.size());
    out.stderr_ = std::sqrt(ss / (B - 1.0) / B);
  } else {
    const double hits = static_cast<double>(curve.trajectories) *
                        (curve.fraction[static_cast<std::size_t>(n0)] - curve.fraction[static_cast<std::size_t>(n1)]);
    out.stderr_ = hits > 0 ? out.rate / std::sqrt(hits) : 0.0;
  }
  return out;
}

HittingSample sample_hitting_times(const CollisionScheme& scheme, std::size_t n_traj, long horizon,
                                   const InitSpec& init, const RngSpec& rng) {
  auto out = run_hits(scheme, n_traj, horizon, init, rng, false, false);
  if (n_traj > 0 && 2 * out.censored_count() > n_traj)
    out.warnings.push_back("more than half of the hitting times are censored; horizon is below the mean");
  return out;
}

std::vector<long> cluster_sizes(const std::vector<long>& hit_times, long gap) {
  std::vector<long> sizes;
  for (std::size_t i = 0; i < hit_times.size(); ++i) {
    if (i == 0 || hit_times[i] - hit_times[i - 1] > gap) sizes.push_back(1);
    else ++sizes.back();
  }
  return sizes;
}

CountingSample count_collisions(const CollisionScheme& scheme, double t, double mu_hat,
                                std::size_t n_traj, long gap, const InitSpec& init,
                                const RngSpec& rng) {
  CountingSample out;
  out.t = t;
  out.mu_hat = mu_hat;
  out.gap = gap;
  out.z.assign(n_traj, 0);
  out.clusters.assign(n_traj, {});
  if (scheme.mode() == LatticeMode::disabled || mu_hat <= 0.0) return out;
  const double h = std::floor(t / mu_hat);
  if (!(h <= 1e9)) throw DomainError("counting horizon exceeds 10^9 steps");
  out.horizon = static_cast<long>(h);
  const FocalSimulator sim(scheme);
  parallel_for(n_traj, rng.workers, [&](std::size_t i) {
    auto gen = SplitMix64::substream(rng.seed, i);
    Eigen::ArrayXd x;
    sim.initialize(gen, init, x);
    std::vector<long> hits;
    for (long k = 1; k <= out.horizon; ++k) {
      sim.step(x, true);
      if (sim.in_hole(x)) hits.push_back(k);
    }
    out.z[i] = static_cast<long>(hits.size());
    out.clusters[i] = cluster_sizes(hits, gap);
  }, 8);
  return out;
}

std::vector<CfPoint> empirical_cf(const std::vector<long>& z, const std::vector<double>& s_grid,
                                  int bootstrap, std::uint64_t seed) {
  if (z.size() < 10000) throw SampleError("empirical_cf needs at least 10^4 trajectories");
  const double n = static_cast<double>(z.size());
  auto cf = [&](double s, const std::vector<std::size_t>* idx) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const long zi = idx ? z[(*idx)[i]] : z[i];
      acc += std::polar(1.0, s * static_cast<double>(zi));
    }
    return acc / n;
  };
  std::vector<CfPoint> out;
  for (double s : s_grid) out.push_back({s, s == 0.0 ? std::complex<double>(1.0, 0.0) : cf(s, nullptr), {}, {}});
  std::vector<std::vector<double>> re(s_grid.size()), im(s_grid.size());
  std::vector<std::size_t> idx(z.size());
  for (int b = 0; b < bootstrap; ++b) {
    auto gen = SplitMix64::substream(seed, static_cast<std::uint64_t>(b));
    for (auto& k : idx) k = static_cast<std::size_t>(gen() % z.size());
    for (std::size_t j = 0; j < s_grid.size(); ++j) {
      const auto v = cf(s_grid[j], &idx);
      re[j].push_back(v.real());
      im[j].push_back(v.imag());
    }
  }
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    if (bootstrap < 2) {
      out[j].lower = out[j].upper = out[j].value;
      continue;
    }
    std::sort(re[j].begin(), re[j].end());
    std::sort(im[j].begin(), im[j].end());
    const auto lo = static_cast<std::size_t>(0.025 * (bootstrap - 1));
    const auto hi = static_cast<std::size_t>(std::ceil(0.975 * (bootstrap - 1)));
    out[j].lower = {re[j][lo], im[j][lo]};
    out[j].upper = {re[j][hi], im[j][hi]};
  }
  return out;
}

std::complex<double> poisson_cf(double s, double intensity, double t) {
  const std::complex<double> e = std::polar(1.0, s);
  return std::exp(-(1.0 - e) * intensity * t);
}

namespace {

/// Piecewise-constant rho_tau, or none for maps preserving Lebesgue.
std::optional<DensityEstimate> site_density(const PiecewiseExpandingMap& map) {
  if (map.uniform_beta() > 0) return std::nullopt;
  return invariant_density(map, 1024).density;
}

}  // namespace

BetaEstimate estimate_beta(const CollisionScheme& scheme, int k, int j, int variant,
                           std::size_t n_starts, const RngSpec& rng) {
  if (variant != 1 && variant != 2) throw DomainError("beta variant must be 1 or 2");
  if (k < 0 || j < 0) throw DomainError("beta needs k, j >= 0");
  if (n_starts < 500) throw SampleError("beta estimation needs at least 500 starts inside H");
  BetaEstimate out;
  out.starts = n_starts;
  out.approximate = scheme.mode() == LatticeMode::full_lattice;
  if (scheme.mode() == LatticeMode::disabled) return out;
  const FocalSimulator sim(scheme);
  const auto rho = site_density(scheme.map());
  std::vector<double> weight(n_starts), hit(n_starts);
  const int nv = scheme.direction_count();
  parallel_for(n_starts, rng.workers, [&](std::size_t i) {
    auto gen = SplitMix64::substream(rng.seed, i);
    Eigen::ArrayXd x;
    sim.draw_lebesgue(gen, x);
    const int v = static_cast<int>(gen() % static_cast<std::uint64_t>(nv));
    const int w = CollisionScheme::opposite(v);
    x[sim.focal_slot()] = scheme.zone_lo(v, true) + gen.uniform() * scheme.delta();
    x[sim.neighbor_slot(v)] = scheme.zone_lo(w, true) + gen.uniform() * scheme.delta();
    double wt = 1.0;
    if (rho)
      for (int s = 0; s < x.size(); ++s) wt *= rho->at(x[s]);
    int count = 0;
    bool last = false;
    if (variant == 1) {
      sim.step(x, false);
      for (int i2 = 0; i2 <= k; ++i2) {
        const bool in = sim.in_hole(x);
        if (i2 < k) count += in;
        else last = in;
        if (i2 < k) sim.step(x, true);
      }
    } else {
      for (int i2 = 1; i2 <= k + 1; ++i2) {
        sim.step(x, true);
        const bool in = sim.in_hole(x);
        if (i2 <= k) count += in;
        else last = in;
      }
    }
    weight[i] = wt;
    hit[i] = (last && count == j) ? 1.0 : 0.0;
  });
  double sw = 0, swh = 0;
  for (std::size_t i = 0; i < n_starts; ++i) {
    sw += weight[i];
    swh += weight[i] * hit[i];
  }
  out.value = swh / sw;
  double var = 0;
  for (std::size_t i = 0; i < n_starts; ++i) {
    const double r = weight[i] * (hit[i] - out.value);
    var += r * r;
  }
  out.stderr_ = std::sqrt(var) / sw;
  return out;
}

std::vector<MassRow> mass_asymptotics_check(const CollisionScheme& scheme,
                                            const std::vector<double>& deltas, DensitySource source,
                                            std::size_t grid_size, std::size_t n_traj, long steps,
                                            const RngSpec& rng) {
  if (grid_size < 16 || (scheme.mode() != LatticeMode::disabled &&
                         scheme.epsilon() * static_cast<double>(grid_size) < 4.0))
    throw ResolutionError("density grid too coarse to resolve the collision zones");
  std::vector<MassRow> rows;
  const auto rho_tau = invariant_density(scheme.map(), grid_size).density;
  for (double delta : deltas) {
    MassRow row;
    row.delta = delta;
    if (scheme.mode() == LatticeMode::disabled) {
      row.ratio = 1.0;
      rows.push_back(row);
      continue;
    }
    const CollisionScheme s = with_delta(scheme, delta);
    const int nv = s.direction_count();
    std::vector<DensityEstimate> neighbor_density(static_cast<std::size_t>(nv));
    if (source == DensitySource::ulam) {
      const BoxModel box = make_box(s, BoxShape::triple, grid_size, Dynamics::decoupled);
      const RealOperator closed(box, OperatorKind::closed);
      const auto res = leading_eigen(closed);
      row.direct = (res.vector.array() * box.hole_fraction()).sum();
      for (const auto& ch : box.channels)
        neighbor_density[static_cast<std::size_t>(ch.direction)] =
            marginal_density(res.vector, box, ch.partner_axis);
    } else {
      const FocalSimulator sim(s);
      const std::size_t bins = grid_size;
      std::vector<std::vector<double>> hist(n_traj, std::vector<double>(static_cast<std::size_t>(nv) * bins, 0.0));
      std::vector<double> in_h(n_traj, 0.0);
      parallel_for(n_traj, rng.workers, [&](std::size_t i) {
        auto gen = SplitMix64::substream(rng.seed, i);
        Eigen::ArrayXd x;
        sim.initialize(gen, {InitKind::invariant, 1000}, x);
        for (long n = 0; n < steps; ++n) {
          in_h[i] += sim.in_hole(x);
          for (int v = 0; v < nv; ++v) {
            auto b = static_cast<std::size_t>(x[sim.neighbor_slot(v)] * static_cast<double>(bins));
            hist[i][static_cast<std::size_t>(v) * bins + std::min(b, bins - 1)] += 1.0;
          }
          sim.step(x, false);
        }
      }, 4);
      const double total = static_cast<double>(n_traj) * static_cast<double>(steps);
      row.direct = std::accumulate(in_h.begin(), in_h.end(), 0.0) / total;
      for (int v = 0; v < nv; ++v) {
        auto d = DensityEstimate::uniform_grid(bins);
        for (std::size_t b = 0; b < bins; ++b) {
          double c = 0;
          for (std::size_t i = 0; i < n_traj; ++i) c += hist[i][static_cast<std::size_t>(v) * bins + b];
          d.values[b] = c / total * static_cast<double>(bins);
        }
        neighbor_density[static_cast<std::size_t>(v)] = std::move(d);
      }
    }
    for (int v = 0; v < nv; ++v) {
      const auto& nd = neighbor_density[static_cast<std::size_t>(v)];
      if (nd.values.empty()) continue;
      const double a_minus = s.center(CollisionScheme::opposite(v));
      row.formula += rho_tau.at(s.center(v)) * delta * delta *
                     (nd.right_limit(a_minus) + nd.left_limit(a_minus)) / 2.0;
    }
    row.ratio = row.formula > 0 ? row.direct / row.formula : (row.direct == 0 ? 1.0 : 0.0);
    rows.push_back(row);
  }
  return rows;
}

NegligibilityResult index_negligibility(const CollisionScheme& scheme, int k_max,
                                        std::size_t n_starts, const RngSpec& rng) {
  NegligibilityResult out;
  if (scheme.mode() == LatticeMode::disabled) return out;
  const int nv = scheme.direction_count();
  const int p = scheme.focal();
  std::vector<std::size_t> returns(n_starts, 0), moved(n_starts, 0);
  parallel_for(n_starts, rng.workers, [&](std::size_t i) {
    auto gen = SplitMix64::substream(rng.seed, i);
    Eigen::ArrayXd x(scheme.site_count());
    for (auto& c : x) c = gen.uniform();
    const int v = static_cast<int>(gen() % static_cast<std::uint64_t>(nv));
    const int q = scheme.neighbor(p, v);
    x[p] = scheme.zone_lo(v, true) + gen.uniform() * scheme.delta();
    x[q] = scheme.zone_lo(CollisionScheme::opposite(v), true) + gen.uniform() * scheme.delta();
    LatticeState cur(scheme, x);
    int idx = q;
    for (int k = 1; k <= k_max; ++k) {
      for (const auto& pr : collision_pairs(cur, {Dynamics::decoupled})) {
        const int partner = scheme.neighbor(pr.site, pr.direction);
        if (pr.site == idx) { idx = partner; break; }
        if (partner == idx) { idx = pr.site; break; }
      }
      advance(cur, {Dynamics::decoupled});
      for (int w = 0; w < nv; ++w) {
        if (scheme.in_zone(cur.x[p], w, true) &&
            scheme.in_zone(cur.x[scheme.neighbor(p, w)], CollisionScheme::opposite(w), true)) {
          ++returns[i];
          if (idx != scheme.neighbor(p, w)) ++moved[i];
        }
      }
    }
  });
  out.returns = std::accumulate(returns.begin(), returns.end(), std::size_t{0});
  out.moved = std::accumulate(moved.begin(), moved.end(), std::size_t{0});
  return out;
}

}  // namespace collab
