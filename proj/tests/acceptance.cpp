// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "collab/errors.hpp"
#include "collab/experiment.hpp"
#include "collab/parallel.hpp"
#include "collab/rare_events.hpp"
#include "collab/statistics.hpp"
#include "collab/theory.hpp"
#include "collab/ulam.hpp"

using namespace collab;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int workers = 1;
int failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COLLAB_CLI) + " " + args + " > /dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("collab_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CollisionScheme example_scheme(double delta) {
  return CollisionScheme(PiecewiseExpandingMap::mod_beta(5), example_scheme_params(delta));
}

void guarded(const std::string& id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what());
  }
}

// Worked example: exact theta, recurrence sets, theta~ and phi_X, < 1 s.
void criterion_1() {
  const auto dir = scratch("c1");
  const auto t0 = Clock::now();
  const int code = run_cli("example --out " + dir.string());
  const double wall = seconds_since(t0);
  report("1.cli", code == exit_ok && wall < 1.0,
         "exit " + std::to_string(code) + ", " + fmt("%.3f s", wall) + " (limit 1 s)");

  const auto rep = example_report(true, 20);
  const auto& th = rep.theta;
  const bool exact = th.exact && *th.exact == Rational(1) - Rational(1, 625);
  report("1.theta", exact && th.theta == 0.9984,
         "theta = " + (th.exact ? to_string(*th.exact) : std::string("(no exact value)")) + " = " +
             fmt("%.17g", th.theta));

  // S^rec holds both channels: (a_{+1}, a_{-1}) = (1/2, 1/4) and (1/4, 1/2).
  const auto& rec = rep.recurrence;
  report("1.recurrence", rec.s_rec == std::vector<int>{0, 1} && rec.s_tilde_rec.empty(),
         "S^rec channels " + std::to_string(rec.s_rec.size()) + ", S~^rec channels " +
             std::to_string(rec.s_tilde_rec.size()));

  double dev_tilde = 0.0, dev_phi = 0.0;
  for (const auto& p : rep.tilde) {
    dev_tilde = std::max(dev_tilde, std::abs(p.theta_tilde - std::complex<double>(th.theta)));
    dev_phi = std::max(dev_phi, std::abs(p.phi_x - std::polar(1.0, p.s)));
  }
  report("1.counting", !rep.tilde.empty() && dev_tilde < 1e-12 && dev_phi < 1e-12,
         std::to_string(rep.tilde.size()) + " s points, max |theta~ - theta| " + fmt("%.2g", dev_tilde) +
             ", max |phi_X - e^{is}| " + fmt("%.2g", dev_phi));

  const json ex = read_json(dir / "example.json");
  report("1.artifact", ex["theta"]["theta"]["exact"] == "624/625",
         "example.json theta " + ex["theta"]["theta"]["exact"].dump());
}

// Open 1D doubling map: golden-ratio eigenvalue and the fixed-point extremal index.
void criterion_2() {
  const auto t0 = Clock::now();
  const auto two = PiecewiseExpandingMap::mod_beta(2);
  const double golden = (1.0 + std::sqrt(5.0)) / 4.0;
  for (std::size_t n : {64u, 256u}) {
    const auto r = interval_eigen(two, Grid1D::uniform(n), 0.0, 0.25);
    const double err = std::abs(r.modulus - golden);
    report("2.lambda N=" + std::to_string(n), err <= 1e-6,
           "lambda " + fmt("%.15f", r.modulus) + ", |lambda - (1+sqrt5)/4| " + fmt("%.2e", err));
  }
  const double eta = std::ldexp(1.0, -8);
  const auto r = interval_eigen(two, Grid1D::uniform(1u << 14), 0.0, eta);
  const double ratio = (1.0 - r.modulus) / eta;
  report("2.fixed-point", std::abs(ratio - 0.5) <= 0.05 * 0.5,
         "(1 - lambda)/eta = " + fmt("%.6f", ratio) + " at eta = 2^-8, N = 2^14 (target 1/2 +- 5%)");
  const double wall = seconds_since(t0);
  report("2.runtime", wall < 30.0, fmt("%.2f s (limit 30 s)", wall));
}

// Collision-rate scaling in delta and agreement with the 3-site Ulam operator.
void criterion_3() {
  const auto t0 = Clock::now();
  const std::vector<double> deltas{0.02, 0.01, 0.005};
  const std::size_t n_traj = 1000000;
  const long horizon = 2000;
  std::vector<double> rates;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto s = example_scheme(deltas[i]);
    const auto curve = estimate_survival(s, n_traj, horizon, {300 + i, workers}, 20);
    const auto fit = fit_escape_rate(curve, 20, horizon);
    const BoxModel box = make_box(s, BoxShape::triple, 100, Dynamics::decoupled, true);
    const auto eig = leading_eigen(RealOperator(box, OperatorKind::open));
    const double se = fit.stderr_;  // the Markov-exact Ulam value carries no sampling error
    const double z = std::abs(fit.rate - eig.escape_rate) / se;
    report("3.ulam delta=" + fmt("%g", deltas[i]), z <= 3.0,
           "MC rate " + fmt("%.6e", fit.rate) + " +- " + fmt("%.1e", se) + ", Ulam -ln lambda " +
               fmt("%.6e", eig.escape_rate) + " (" + std::to_string(box.cells_per_axis()) +
               " cells/axis), " + fmt("%.2f combined se", z));
    rates.push_back(fit.rate);
  }
  for (std::size_t i = 0; i + 1 < rates.size(); ++i) {
    const double ratio = rates[i] / rates[i + 1];
    report("3.ratio delta=" + fmt("%g", deltas[i]), std::abs(ratio - 4.0) <= 0.15 * 4.0,
           "rate(delta)/rate(delta/2) = " + fmt("%.4f", ratio) + " (4 +- 15%)");
  }
  const double wall = seconds_since(t0);
  report("3.runtime", wall < 600.0, fmt("%.1f s (limit 600 s)", wall));
}

// Exponential law of the rescaled hitting times.
KsResult hitting_ks(double delta, std::size_t n, std::uint64_t seed) {
  const auto s = example_scheme(delta);
  // 60 mean hitting times: censoring probability about e^-60.
  const auto horizon = static_cast<long>(60.0 / (2.0 * delta * delta));
  const auto sample = sample_hitting_times(s, n, horizon, {InitKind::invariant, 1000}, {seed, workers});
  if (sample.censored_count() > 0) throw SampleError("censored hitting times in the KS sample");
  return ks_exponential(sample.uncensored(), KsScaling::empirical_mean);
}

void criterion_4() {
  const auto main = hitting_ks(0.01, 100000, 400);
  report("4.ks", main.statistic <= 0.02,
         "KS " + fmt("%.5f", main.statistic) + " (p " + fmt("%.3f", main.p_value) +
             ") on 10^5 uncensored times, delta 0.01");

  int decreasing = 0;
  std::string detail;
  for (int r = 0; r < 10; ++r) {
    const double coarse = hitting_ks(0.02, 100000, 1000 + r).statistic;
    const double fine = hitting_ks(0.005, 100000, 1000 + r).statistic;  // replicate r: one seed, both deltas
    if (fine < coarse) ++decreasing;
    detail += fmt(" %.4f", coarse) + fmt(">%.4f", fine);
  }
  report("4.trend", decreasing >= 8,
         std::to_string(decreasing) + "/10 replicates with KS(0.005) < KS(0.02):" + detail);
}

// Counting statistics at delta = 0.005.
void criterion_5() {
  const double delta = 0.005, t = 5.0;
  const auto s = example_scheme(delta);
  const double mu = 2.0 * delta * delta;
  const auto cs = count_collisions(s, t, mu, 10000, 10, {InitKind::invariant, 1000}, {500, workers});
  const double single = cs.singleton_fraction();
  report("5.clusters", single >= 0.99, "singleton fraction " + fmt("%.5f", single));
  const double mean = cs.mean_z();
  const double tv = poisson_tv_distance(cs.z, mean);
  report("5.poisson", tv <= 0.02, "TV to Poisson(" + fmt("%.4f", mean) + ") = " + fmt("%.4f", tv));
  const double theta_hat = spectral_theta(s, {delta}, 20).front().theta_spec;
  std::printf("INFO 5.intensity: mean Z/t = %.4f against theta_hat = %.4f and 1 (not asserted)\n",
              mean / t, theta_hat);
}

// Operator difference: exact hole mass and TV slope.
void criterion_6() {
  const auto s = example_scheme(0.02);
  const auto g = operator_gap_diagnostics(s, BoxShape::triple, 40, {0.02, 0.01, 0.005, 0.0025});
  double worst = 0.0;
  for (const auto& r : g.rows)
    worst = std::max(worst, std::abs(r.mass_difference - 2 * r.delta * r.delta) / (2 * r.delta * r.delta));
  report("6.mass", worst <= 1e-12, "max relative |Delta_delta - 2 delta^2| " + fmt("%.2e", worst));
  report("6.slope", g.tv_slope >= 1.0, "log-log TV slope " + fmt("%.4f", g.tv_slope));
}

// Structural invariants through the CLI, and determinism across worker counts.
void criterion_7() {
  const auto dir = scratch("c7");
  const auto t0 = Clock::now();
  const int code = run_cli("selfcheck --out " + (dir / "self").string());
  const double wall = seconds_since(t0);
  const json checks = read_json(dir / "self" / "selfcheck.json");
  std::size_t passed = 0;
  for (const auto& c : checks) passed += c["pass"].get<bool>();
  report("7.selfcheck", code == exit_ok && passed == checks.size() && wall < 60.0,
         std::to_string(passed) + "/" + std::to_string(checks.size()) + " checks, exit " +
             std::to_string(code) + ", " + fmt("%.2f s (limit 60 s)", wall));

  json cfg = default_config();
  cfg["run"] = {{"n_traj", 20000}, {"horizon", 300}, {"deltas", {0.02, 0.01}}};
  std::ofstream(dir / "cfg.json") << cfg.dump();
  std::vector<json> manifests;
  for (int w : {1, 2, 4}) {
    const auto out = dir / ("w" + std::to_string(w));
    run_cli("simulate-survival --config " + (dir / "cfg.json").string() + " --out " + out.string() +
            " --seed 11 --workers " + std::to_string(w));
    manifests.push_back(read_json(out / "manifest.json"));
  }
  auto data_files = [](const json& m) {
    json f = json::array();
    for (const auto& x : m["files"])
      if (x["path"] != "summary.json") f.push_back(x);  // summary carries the worker count
    return f;
  };
  const bool same = data_files(manifests[0]) == data_files(manifests[1]) &&
                    data_files(manifests[0]) == data_files(manifests[2]) && !data_files(manifests[0]).empty();
  report("7.determinism", same, "survival CSV hashes identical for 1, 2 and 4 workers");
}

}  // namespace

int main(int argc, char** argv) {
  workers = resolve_workers(0);
  std::vector<std::string> only(argv + 1, argv + argc);
  auto wanted = [&](const std::string& id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  std::printf("acceptance: %d worker(s)\n", workers);
  const std::vector<std::pair<std::string, void (*)()>> criteria{
      {"1", criterion_1}, {"2", criterion_2}, {"3", criterion_3}, {"4", criterion_4},
      {"5", criterion_5}, {"6", criterion_6}, {"7", criterion_7}};
  for (const auto& [id, fn] : criteria)
    if (wanted(id)) guarded(id, fn);
  std::printf("acceptance: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
