#include "collab/experiment.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "collab/errors.hpp"
#include "collab/json_schema.hpp"
#include "collab/parallel.hpp"
#include "collab/schemas.hpp"

namespace collab {

using nlohmann::json;

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("COLLAB_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(std::min<long>(n, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string config_hash(const json& doc) { return sha256_hex(doc.dump()); }

json default_config() {
  return json::parse(R"({
    "map": {"kind": "mod_beta", "beta": 5},
    "scheme": {"dimension": 1, "side": 9, "centers": {"+1": "1/2", "-1": "1/4"},
               "epsilon": "1/10", "delta": "1/100", "mode": "isolated_neighborhood"}
  })");
}

namespace {

Rational rational_of(const json& j, const std::string& what) {
  if (j.is_string()) {
    if (auto r = parse_rational(j.get<std::string>())) return *r;
    throw ConfigError(what + ": cannot parse '" + j.get<std::string>() + "' as a rational");
  }
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (auto r = rational_from_double(j.get<double>())) return *r;
  throw ConfigError(what + ": " + j.dump() + " is not a short rational; give it as \"p/q\"");
}

double number_of(const json& j, const std::string& what) {
  if (j.is_string()) return to_double(rational_of(j, what));
  return j.get<double>();
}

std::vector<Rational> rationals_of(const json& arr, const std::string& what) {
  std::vector<Rational> out;
  for (const auto& x : arr) out.push_back(rational_of(x, what));
  return out;
}

LatticeMode mode_of(const std::string& s) {
  if (s == "full_lattice") return LatticeMode::full_lattice;
  if (s == "disabled") return LatticeMode::disabled;
  return LatticeMode::isolated_neighborhood;
}

const char* mode_name(LatticeMode m) {
  switch (m) {
    case LatticeMode::full_lattice: return "full_lattice";
    case LatticeMode::disabled: return "disabled";
    default: return "isolated_neighborhood";
  }
}

const char* box_name(BoxShape b) { return b == BoxShape::pair ? "pair" : "triple"; }

const char* kind_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::closed: return "closed";
    case OperatorKind::twisted: return "twisted";
    default: return "open";
  }
}

json rational_json(const std::optional<Rational>& r, double value) {
  json j = {{"value", value}};
  if (r) j["exact"] = to_string(*r);
  return j;
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

/// Files of one run, hashed as they are written.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error("cannot create output directory " + root_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = root_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw Error("write failed for " + path.string());
    files_.emplace_back(name, sha256_hex(content));
  }

  void write_json(const std::string& name, const json& doc) { write(name, doc.dump(2) + "\n"); }

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::pair<std::string, std::string>> files_;
};

/// Hole mass from the densities at the zone centers, with rho_{eps,q} := rho_tau.
double hole_mass_formula(const CollisionScheme& scheme) {
  if (scheme.mode() == LatticeMode::disabled) return 0.0;
  const DensityInputs d = idealized_densities(scheme);
  double m = 0.0;
  for (int v = 0; v < scheme.direction_count(); ++v) {
    const auto [hi, lo] = d.neighbor_limits(v);
    m += d.rho_tau(scheme.center(v)) * (hi + lo) / 2.0;
  }
  return m * scheme.delta() * scheme.delta();
}

std::string suffix(std::size_t i, std::size_t n) { return n == 1 ? "" : "_" + std::to_string(i); }

std::vector<double> deltas_of(const ExperimentConfig& cfg) {
  return cfg.run.deltas.empty() ? std::vector<double>{cfg.scheme.delta} : cfg.run.deltas;
}

BoxShape box_of(const ExperimentConfig& cfg) {
  if (cfg.run.box) return *cfg.run.box;
  return cfg.scheme.dimension == 1 ? BoxShape::triple : BoxShape::pair;
}

struct Context {
  const ExperimentConfig& cfg;
  RngSpec rng;
  OutputDir& out;
  std::ostream* log;
  std::vector<std::string>& warnings;
  std::vector<std::string>& questions;
  bool passed = true;

  void say(const std::string& line) const {
    if (log) *log << line << '\n';
  }
};

json run_survival(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const CollisionScheme base = cfg.build_scheme();
  const auto deltas = deltas_of(cfg);
  json rows = json::array();
  std::vector<double> rates;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const CollisionScheme s = with_delta(base, deltas[i]);
    const SurvivalCurve curve = estimate_survival(s, cfg.run.n_traj, cfg.run.horizon, ctx.rng, cfg.run.batches);
    std::string csv = "n,fraction,stderr\n";
    for (std::size_t n = 0; n < curve.fraction.size(); ++n)
      csv += std::to_string(n) + "," + format_double(curve.fraction[n]) + "," + format_double(curve.stderr_[n]) + "\n";
    const std::string name = "survival" + suffix(i, deltas.size()) + ".csv";
    ctx.out.write(name, csv);

    json row = {{"delta", deltas[i]}, {"file", name}, {"trajectories", curve.trajectories},
                {"horizon", cfg.run.horizon}, {"mode", mode_name(s.mode())},
                {"hole_lebesgue_measure", s.hole_lebesgue_measure()}};
    if (s.mode() == LatticeMode::disabled) {
      row["rate"] = 0.0;
      rates.push_back(0.0);
    } else {
      const auto [n0, n1] = cfg.run.window.value_or(std::pair<long, long>{20, cfg.run.horizon});
      try {
        const EscapeFit fit = fit_escape_rate(curve, n0, n1);
        row["rate"] = fit.rate;
        row["rate_stderr"] = fit.stderr_;
        row["r2"] = fit.r2;
        row["window"] = {fit.n0, fit.n1};
        if (fit.n1 != n1) ctx.warnings.push_back("delta " + format_double(deltas[i]) + ": fit window shrunk to " + std::to_string(fit.n1));
        rates.push_back(fit.rate);
      } catch (const SampleError& e) {
        ctx.warnings.push_back(std::string("escape-rate fit skipped: ") + e.what());
        rates.push_back(std::nan(""));
      }
      if (cfg.run.grid_sizes_given && s.mode() == LatticeMode::isolated_neighborhood) {
        const BoxModel box = make_box(s, box_of(cfg), cfg.run.grid_sizes.front(), Dynamics::decoupled, cfg.run.refine);
        const RealOperator open(box, OperatorKind::open);
        const auto eig = leading_eigen(open);
        row["ulam"] = {{"N", cfg.run.grid_sizes.front()}, {"cells_per_axis", box.cells_per_axis()},
                       {"box", box_name(box_of(cfg))}, {"lambda", eig.lambda}, {"escape_rate", eig.escape_rate},
                       {"markov", box.grid.markov}};
      }
    }
    ctx.say("delta " + format_double(deltas[i]) + ": rate " + (row.contains("rate") ? row["rate"].dump() : "n/a"));
    rows.push_back(row);
  }
  json ratios = json::array();
  for (std::size_t i = 0; i + 1 < deltas.size(); ++i)
    if (std::abs(deltas[i + 1] * 2.0 - deltas[i]) < 1e-12 * deltas[i] && rates[i + 1] > 0)
      ratios.push_back({{"delta", deltas[i]}, {"rate_ratio", rates[i] / rates[i + 1]}});

  if (cfg.run.event_log_steps > 0) {
    // Event log of trajectory 0 on the whole torus.
    auto gen = SplitMix64::substream(ctx.rng.seed, 0);
    Eigen::ArrayXd x(base.site_count());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = gen.uniform();
    LatticeState state(base, x);
    std::vector<SwapEvent> events;
    for (long n = 0; n < cfg.run.event_log_steps; ++n) advance(state, {Dynamics::full}, &events, n);
    std::string csv = "step,site,direction,focal\n";
    for (const auto& e : events)
      csv += std::to_string(e.step) + "," + std::to_string(e.site) + "," + CollisionScheme::label(e.direction) +
             "," + (e.focal ? "1" : "0") + "\n";
    ctx.out.write("events.csv", csv);
  }
  return {{"deltas", rows}, {"halving_ratios", ratios}};
}

json run_hitting(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const CollisionScheme base = cfg.build_scheme();
  const auto deltas = deltas_of(cfg);
  const InitSpec init{cfg.run.init, cfg.run.burn_in};
  json rows = json::array();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const CollisionScheme s = with_delta(base, deltas[i]);
    const HittingSample sample = sample_hitting_times(s, cfg.run.n_traj, cfg.run.horizon, init, ctx.rng);
    for (const auto& w : sample.warnings) ctx.warnings.push_back("delta " + format_double(deltas[i]) + ": " + w);
    std::string csv = "trajectory,t_hit,censored\n";
    for (std::size_t t = 0; t < sample.times.size(); ++t)
      csv += std::to_string(t) + "," + std::to_string(sample.times[t]) + "," + (sample.censored[t] ? "1" : "0") + "\n";
    const std::string name = "hitting" + suffix(i, deltas.size()) + ".csv";
    ctx.out.write(name, csv);

    const auto times = sample.uncensored();
    const double mu = hole_mass_formula(s);
    json row = {{"delta", deltas[i]}, {"file", name}, {"trajectories", sample.times.size()},
                {"censored", sample.censored_count()}, {"uncensored", times.size()}, {"mu_hat", mu},
                {"init", cfg.run.init == InitKind::invariant ? "invariant" : "lebesgue"}, {"burn_in", cfg.run.burn_in}};
    if (!times.empty()) {
      const double mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
      row["mean"] = mean;
      if (mean > 0 && mu > 0) row["xi_hat"] = 1.0 / (mean * mu);
    }
    if (times.size() >= 100) {
      const KsResult ks = ks_exponential(times, KsScaling::empirical_mean);
      row["ks_statistic"] = ks.statistic;
      row["ks_p_value"] = ks.p_value;
      row["ks_scale"] = ks.scale;
      ctx.say("delta " + format_double(deltas[i]) + ": KS " + format_double(ks.statistic));
    } else {
      ctx.warnings.push_back("delta " + format_double(deltas[i]) + ": fewer than 100 uncensored times, KS skipped");
    }
    rows.push_back(row);
  }
  return {{"deltas", rows}};
}

json run_count(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const CollisionScheme s = cfg.build_scheme();
  const double mu = hole_mass_formula(s);
  const InitSpec init{cfg.run.init, cfg.run.burn_in};
  const CountingSample cs = count_collisions(s, cfg.run.t, mu, cfg.run.n_traj, cfg.run.gap, init, ctx.rng);
  std::string csv = "trajectory,Z,clusters\n";
  for (std::size_t i = 0; i < cs.z.size(); ++i) {
    csv += std::to_string(i) + "," + std::to_string(cs.z[i]) + ",";
    for (std::size_t c = 0; c < cs.clusters[i].size(); ++c)
      csv += (c ? ";" : "") + std::to_string(cs.clusters[i][c]);
    csv += "\n";
  }
  ctx.out.write("counts.csv", csv);

  // theta_hat: spectral estimate when a closed box exists, else the formula.
  double theta_hat = 1.0;
  std::string theta_source = "formula";
  if (s.mode() == LatticeMode::isolated_neighborhood) {
    try {
      const std::size_t n = cfg.run.grid_sizes_given ? cfg.run.grid_sizes.front() : 20;
      theta_hat = spectral_theta(s, {s.delta()}, n).front().theta_spec;
      theta_source = "spectral";
    } catch (const Error& e) {
      ctx.warnings.push_back(std::string("spectral theta unavailable: ") + e.what());
    }
  }
  if (theta_source == "formula" && s.mode() != LatticeMode::disabled) {
    const auto rec = detect_recurrence(s, cfg.run.k_max);
    theta_hat = theta_value(s, rec, idealized_densities(s), cfg.run.truncation).theta;
  }

  const double mean = cs.mean_z();
  double var = 0.0;
  for (long z : cs.z) var += (static_cast<double>(z) - mean) * (static_cast<double>(z) - mean);
  var /= std::max<double>(1.0, static_cast<double>(cs.z.size()) - 1.0);
  std::size_t cluster_count = 0;
  for (const auto& c : cs.clusters) cluster_count += c.size();
  json res = {{"delta", s.delta()}, {"t", cfg.run.t}, {"mu_hat", mu}, {"horizon", cs.horizon},
              {"gap", cs.gap}, {"trajectories", cs.z.size()}, {"mean_z", mean},
              {"mean_z_stderr", std::sqrt(var / std::max<double>(1.0, static_cast<double>(cs.z.size())))},
              {"mean_z_over_t", mean / cfg.run.t}, {"theta_hat", theta_hat}, {"theta_source", theta_source},
              {"clusters", cluster_count}, {"singleton_fraction", cs.singleton_fraction()},
              {"poisson_tv", cs.z.empty() ? 0.0 : poisson_tv_distance(cs.z, mean)}};
  ctx.questions.push_back("counting intensity: mean Z/t compared against both theta_hat and 1");
  if (cs.z.size() >= 10000) {
    const auto cf = empirical_cf(cs.z, cfg.run.s_grid, 200, ctx.rng.seed);
    json rows = json::array();
    for (const auto& p : cf)
      rows.push_back({{"s", p.s}, {"value", complex_json(p.value)}, {"lower", complex_json(p.lower)},
                      {"upper", complex_json(p.upper)},
                      {"dist_theta", std::abs(p.value - poisson_cf(p.s, theta_hat, cfg.run.t))},
                      {"dist_one", std::abs(p.value - poisson_cf(p.s, 1.0, cfg.run.t))}});
    res["cf"] = rows;
  } else {
    ctx.warnings.push_back("fewer than 10^4 trajectories: characteristic function skipped");
  }
  ctx.say("mean Z/t " + format_double(mean / cfg.run.t) + ", theta_hat " + format_double(theta_hat));
  return res;
}

template <typename Scalar>
json ulam_row(const ExperimentConfig& cfg, const BoxModel& box, std::size_t n, OutputDir& out, std::size_t idx,
              std::size_t count) {
  const TransferOperator<Scalar> op(box, cfg.run.op, cfg.run.twist);
  const auto eig = leading_eigen(op);
  json row = {{"kind", kind_name(cfg.run.op)}, {"N", n}, {"cells_per_axis", box.cells_per_axis()},
              {"box", box_name(box.axes() == 2 ? BoxShape::pair : BoxShape::triple)},
              {"delta", box.scheme->delta()}, {"s", cfg.run.twist}, {"lambda_modulus", eig.modulus},
              {"lambda_phase", eig.phase}, {"escape_rate", eig.escape_rate}, {"residual", eig.residual},
              {"iterations", eig.iterations}, {"markov", box.grid.markov}};
  if (cfg.run.dump_density) {
    Eigen::VectorXd mass(eig.vector.size());
    for (Eigen::Index i = 0; i < mass.size(); ++i) mass[i] = std::abs(eig.vector[i]);
    std::string csv = "axis,site,left,right,density\n";
    for (int a = 0; a < box.axes(); ++a) {
      const auto d = marginal_density(mass, box, a);
      for (std::size_t c = 0; c < d.size(); ++c)
        csv += std::to_string(a) + "," + std::to_string(box.sites[static_cast<std::size_t>(a)]) + "," +
               format_double(d.edges[c]) + "," + format_double(d.edges[c + 1]) + "," + format_double(d.values[c]) + "\n";
    }
    const std::string name = "density" + suffix(idx, count) + ".csv";
    out.write(name, csv);
    row["density_file"] = name;
  }
  return row;
}

json run_ulam(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const CollisionScheme base = cfg.build_scheme();
  const auto deltas = deltas_of(cfg);
  json rows = json::array();
  std::size_t idx = 0;
  const std::size_t count = deltas.size() * cfg.run.grid_sizes.size();
  for (double delta : deltas) {
    const CollisionScheme s = with_delta(base, delta);
    for (std::size_t n : cfg.run.grid_sizes) {
      const BoxModel box = make_box(s, box_of(cfg), n, cfg.run.variant, cfg.run.refine);
      json row = cfg.run.op == OperatorKind::twisted
                     ? ulam_row<std::complex<double>>(cfg, box, n, ctx.out, idx, count)
                     : ulam_row<double>(cfg, box, n, ctx.out, idx, count);
      ctx.say("delta " + format_double(delta) + ", N " + std::to_string(n) + ": |lambda| " +
              format_double(row["lambda_modulus"].get<double>()));
      rows.push_back(row);
      ++idx;
    }
  }
  return {{"reports", rows}};
}

json run_theta(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const CollisionScheme s = cfg.build_scheme();
  ThetaReport r;
  r.map = s.map().describe();
  r.recurrence = detect_recurrence(s, cfg.run.k_max);
  const DensityInputs dens = cfg.run.density_mode == "estimated"
                                 ? estimated_densities(s, cfg.run.grid_sizes.front())
                                 : idealized_densities(s);
  r.theta = theta_value(s, r.recurrence, dens, cfg.run.truncation);
  std::vector<double> grid{0.0};
  for (double x : cfg.run.s_grid)
    if (x != 0.0) grid.push_back(x);
  std::optional<BetaTable> betas;
  if (cfg.run.beta_k_max > 0) {
    betas = estimated_betas(s, cfg.run.beta_k_max, cfg.run.beta_starts, ctx.rng);
  } else if (r.recurrence.s_tilde_rec.empty()) {
    betas = closed_form_betas(s, r.recurrence, dens);
  } else {
    ctx.warnings.push_back("S~^rec is non-empty: set run.beta_k_max to estimate the betas");
  }
  if (betas) r.tilde = theta_tilde_value(r.recurrence, *betas, r.theta.theta, grid);
  if (cfg.run.grid_sizes_given && !cfg.run.deltas.empty() && s.mode() == LatticeMode::isolated_neighborhood)
    r.spectral = spectral_theta(s, cfg.run.deltas, cfg.run.grid_sizes.front());
  ctx.questions.push_back("k = 0 term: theta (k >= 1), theta_k0 and theta_first_return all reported");
  ctx.questions.push_back("J_k taken as all S^rec lags 1 <= j < k");
  for (const auto& n : r.recurrence.notes) ctx.warnings.push_back(n);
  json j = to_json(r);
  j["density_mode"] = dens.mode;
  if (betas) j["beta_notes"] = betas->notes;
  ctx.out.write_json("theta.json", j);
  ctx.say("theta " + format_double(r.theta.theta));
  return j;
}

json run_example(Context& ctx) {
  const ThetaReport r = example_report(true, 20);
  ctx.out.write_json("example.json", to_json(r));
  for (const auto& a : r.assertions) ctx.say((a.pass ? "PASS " : "FAIL ") + a.name);
  for (const auto& sp : r.spectral)
    ctx.say("theta_spec(delta = " + format_double(sp.delta) + ") = " + format_double(sp.theta_spec));
  ctx.passed = r.passed();
  ctx.questions.push_back("k = 0 term: theta_spec compared with theta, theta_k0 and theta_first_return");
  return to_json(r);
}

json run_self(Context& ctx) {
  const auto checks = run_selfcheck(ctx.rng.workers);
  json rows = json::array();
  for (const auto& a : checks) {
    ctx.say((a.pass ? "PASS " : "FAIL ") + a.name + (a.detail.empty() ? "" : " (" + a.detail + ")"));
    rows.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
    ctx.passed = ctx.passed && a.pass;
  }
  ctx.out.write_json("selfcheck.json", rows);
  return {{"checks", rows}, {"passed", ctx.passed}};
}

}  // namespace

PiecewiseExpandingMap ExperimentConfig::build_map() const {
  const std::string kind = map_spec.at("kind").get<std::string>();
  if (kind == "mod_beta") return PiecewiseExpandingMap::mod_beta(map_spec.at("beta").get<int>());
  if (kind == "sine_perturbed")
    return PiecewiseExpandingMap::sine_perturbed(map_spec.at("beta").get<int>(), map_spec.at("amplitude").get<double>());
  return PiecewiseExpandingMap::affine_branches(rationals_of(map_spec.at("points"), "map.points"),
                                                rationals_of(map_spec.at("slopes"), "map.slopes"),
                                                rationals_of(map_spec.at("offsets"), "map.offsets"));
}

CollisionScheme ExperimentConfig::build_scheme() const { return {build_map(), scheme}; }

ExperimentConfig parse_config(const json& doc) {
  static const json schema = json::parse(schemas::config);
  const auto issues = validate_schema(schema, doc);
  if (!issues.empty()) {
    std::string msg = "config does not match the schema:";
    for (const auto& i : issues) msg += "\n  " + i;
    throw ConfigError(msg);
  }
  ExperimentConfig cfg;
  cfg.raw = doc;
  cfg.hash = config_hash(doc);
  cfg.map_spec = doc.at("map");

  const json& sc = doc.at("scheme");
  SchemeParams& p = cfg.scheme;
  p.dimension = sc.at("dimension").get<int>();
  p.side = sc.at("side").get<int>();
  p.epsilon = number_of(sc.at("epsilon"), "scheme.epsilon");
  p.delta = number_of(sc.at("delta"), "scheme.delta");
  p.mode = mode_of(sc.at("mode").get<std::string>());
  if (sc.contains("focal_site")) p.focal_site = sc.at("focal_site").get<std::vector<int>>();
  const int nv = 2 * p.dimension;
  if (sc.contains("centers") && !sc.at("centers").empty()) {
    p.centers.assign(static_cast<std::size_t>(nv), std::nan(""));
    for (const auto& [label, value] : sc.at("centers").items()) {
      int v = 0;
      try {
        v = CollisionScheme::parse_label(label, p.dimension);
      } catch (const Error& e) {
        throw ConfigError(std::string("scheme.centers: ") + e.what());
      }
      p.centers[static_cast<std::size_t>(v)] = number_of(value, "scheme.centers." + label);
    }
    for (int v = 0; v < nv; ++v)
      if (std::isnan(p.centers[static_cast<std::size_t>(v)]))
        throw ConfigError("scheme.centers: missing direction " + CollisionScheme::label(v));
  } else if (p.mode != LatticeMode::disabled) {
    throw ConfigError("scheme.centers is required unless mode is disabled");
  }

  RunParams& r = cfg.run;
  if (doc.contains("run")) {
    const json& rj = doc.at("run");
    auto get = [&](const char* key, auto& dst) {
      if (rj.contains(key)) dst = rj.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("n_traj", r.n_traj);
    get("horizon", r.horizon);
    get("t", r.t);
    get("s_grid", r.s_grid);
    get("deltas", r.deltas);
    get("grid_sizes", r.grid_sizes);
    r.grid_sizes_given = rj.contains("grid_sizes");
    if (rj.contains("box")) r.box = rj.at("box") == "pair" ? BoxShape::pair : BoxShape::triple;
    get("seed", r.seed);
    get("workers", r.workers);
    get("burn_in", r.burn_in);
    if (rj.contains("init")) r.init = rj.at("init") == "lebesgue" ? InitKind::lebesgue : InitKind::invariant;
    if (rj.contains("window")) r.window = std::pair<long, long>{rj.at("window")[0].get<long>(), rj.at("window")[1].get<long>()};
    get("batches", r.batches);
    get("gap", r.gap);
    get("k_max", r.k_max);
    get("truncation", r.truncation);
    get("density_mode", r.density_mode);
    get("beta_k_max", r.beta_k_max);
    get("beta_starts", r.beta_starts);
    if (rj.contains("operator")) {
      const auto k = rj.at("operator").get<std::string>();
      r.op = k == "closed" ? OperatorKind::closed : k == "twisted" ? OperatorKind::twisted : OperatorKind::open;
    }
    get("twist", r.twist);
    if (rj.contains("variant")) r.variant = rj.at("variant") == "full" ? Dynamics::full : Dynamics::decoupled;
    get("refine", r.refine);
    get("dump_density", r.dump_density);
    get("event_log_steps", r.event_log_steps);
  }
  if (r.grid_sizes.empty()) throw ConfigError("run.grid_sizes must not be empty");
  if (r.window && r.window->first >= r.window->second) throw ConfigError("run.window must satisfy n0 < n1");

  // Surface invalid map or scheme data as configuration errors.
  try {
    (void)cfg.build_scheme();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid map or scheme: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RecurrenceReport& rec) {
  json records = json::array();
  for (const auto& r : rec.records)
    records.push_back({{"v", CollisionScheme::label(r.v)}, {"v_prime", CollisionScheme::label(r.v_prime)},
                       {"lag", r.lag}, {"kind", r.kind == RecurrenceKind::s_rec ? "s_rec" : "s_tilde_rec"},
                       {"target_site", r.target_site}, {"j_set", r.j_set}});
  auto labels = [](const std::vector<int>& vs) {
    json a = json::array();
    for (int v : vs) a.push_back(CollisionScheme::label(v));
    return a;
  };
  return {{"records", records}, {"s_rec", labels(rec.s_rec)}, {"s_tilde_rec", labels(rec.s_tilde_rec)},
          {"k_max", rec.k_max}, {"exact", rec.exact}, {"periodic", rec.periodic}, {"notes", rec.notes}};
}

json to_json(const ThetaValue& t) {
  json q = json::array();
  for (const auto& [v, vp, k, value] : t.q_table)
    if (value != 0.0 || k <= 3)
      q.push_back({{"v", CollisionScheme::label(v)}, {"v_prime", CollisionScheme::label(vp)}, {"k", k}, {"q", value}});
  return {{"theta", rational_json(t.exact, t.theta)},
          {"theta_k0", rational_json(t.exact_k0, t.theta_k0)},
          {"theta_first_return", rational_json(t.exact_first_return, t.theta_first_return)},
          {"truncation", t.truncation}, {"tail_bound", t.tail_bound}, {"q", q}, {"notes", t.notes}};
}

json to_json(const ThetaReport& r) {
  json tilde = json::array();
  for (const auto& p : r.tilde)
    tilde.push_back({{"s", p.s}, {"theta_tilde", complex_json(p.theta_tilde)}, {"phi_x", complex_json(p.phi_x)}});
  json spectral = json::array();
  for (const auto& s : r.spectral)
    spectral.push_back({{"delta", s.delta}, {"lambda", s.lambda}, {"mu_hole", s.mu_hole}, {"theta_spec", s.theta_spec}});
  json asserts = json::array();
  for (const auto& a : r.assertions) asserts.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  return {{"map", r.map}, {"recurrence", to_json(r.recurrence)}, {"theta", to_json(r.theta)},
          {"tilde", tilde}, {"spectral", spectral}, {"assertions", asserts}};
}

json RunManifest::to_json() const {
  json files_j = json::array();
  for (const auto& [name, digest] : files) files_j.push_back({{"path", name}, {"sha256", digest}});
  return {{"subcommand", subcommand}, {"config_hash", config_hash}, {"tool_version", tool_version},
          {"seed", seed}, {"workers", workers}, {"files", files_j}, {"wall_clock_seconds", wall_clock},
          {"warnings", warnings}, {"open_questions", open_questions}, {"assertions_passed", assertions_passed}};
}

RunManifest run_experiment(const ExperimentConfig& config, const std::string& subcommand,
                           const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.subcommand = subcommand;
  m.config_hash = config.hash;
  m.tool_version = COLLAB_VERSION;
  m.seed = options.seed.value_or(config.run.seed);
  m.workers = resolve_workers(options.workers > 0 ? options.workers : config.run.workers);

  OutputDir out(options.out);
  Context ctx{config, RngSpec{m.seed, m.workers}, out, options.log, m.warnings, m.open_questions};
  json results;
  if (subcommand == "simulate-survival") results = run_survival(ctx);
  else if (subcommand == "hitting-law") results = run_hitting(ctx);
  else if (subcommand == "count") results = run_count(ctx);
  else if (subcommand == "ulam") results = run_ulam(ctx);
  else if (subcommand == "theta") results = run_theta(ctx);
  else if (subcommand == "example") results = run_example(ctx);
  else if (subcommand == "selfcheck") results = run_self(ctx);
  else throw ConfigError("unknown subcommand '" + subcommand + "'");

  json summary = {{"subcommand", subcommand}, {"tool_version", m.tool_version}, {"config_hash", m.config_hash},
                  {"seed", m.seed}, {"results", results}, {"warnings", m.warnings},
                  {"open_questions", m.open_questions}};
  static const json summary_schema = json::parse(schemas::summary);
  const auto issues = validate_schema(summary_schema, summary);
  if (!issues.empty()) throw Error("summary violates its schema: " + issues.front());
  out.write_json("summary.json", summary);

  m.assertions_passed = ctx.passed;
  m.files = out.files();
  m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream f(options.out / "manifest.json");
  f << m.to_json().dump(2) << "\n";
  if (!f) throw Error("cannot write " + (options.out / "manifest.json").string());
  return m;
}

}  // namespace collab
