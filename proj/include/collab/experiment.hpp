#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "collab/rare_events.hpp"
#include "collab/theory.hpp"
#include "collab/ulam.hpp"

namespace collab {

/// Process exit codes of the CLI.
enum ExitCode : int { exit_ok = 0, exit_schema = 2, exit_runtime = 3, exit_assertion = 4 };

inline const char* const subcommands[] = {"simulate-survival", "hitting-law", "count", "ulam",
                                          "theta", "example", "selfcheck"};

/// The `run` block; every field has a default.
struct RunParams {
  std::size_t n_traj = 100000;
  long horizon = 2000;
  double t = 5.0;
  std::vector<double> s_grid{0.5, 1.0, 2.0};
  std::vector<double> deltas;  // empty: the scheme's delta
  std::vector<std::size_t> grid_sizes{100};
  bool grid_sizes_given = false;
  std::optional<BoxShape> box;  // default: triple for d = 1, else pair
  std::uint64_t seed = 1;
  int workers = 0;
  long burn_in = 1000;
  InitKind init = InitKind::invariant;
  std::optional<std::pair<long, long>> window;
  std::size_t batches = 20;
  long gap = 10;
  int k_max = 200;
  int truncation = 200;
  std::string density_mode = "idealized";
  int beta_k_max = 0;
  std::size_t beta_starts = 2000;
  OperatorKind op = OperatorKind::open;
  double twist = 0.0;
  Dynamics variant = Dynamics::decoupled;
  bool refine = true;
  bool dump_density = false;
  long event_log_steps = 0;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::string hash;
  nlohmann::json map_spec;
  SchemeParams scheme;
  RunParams run;

  PiecewiseExpandingMap build_map() const;
  CollisionScheme build_scheme() const;
};

/// Validates against the published config schema, then parses. Throws
/// ConfigError listing every violation.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The worked example (5x mod 1, centers 1/2 and 1/4, isolated neighbourhood).
nlohmann::json default_config();

/// Hex SHA-256 of the key-sorted compact dump.
std::string config_hash(const nlohmann::json& doc);
std::string sha256_hex(const std::string& bytes);

/// 17 significant digits.
std::string format_double(double x);

nlohmann::json to_json(const ThetaReport& report);
nlohmann::json to_json(const ThetaValue& theta);
nlohmann::json to_json(const RecurrenceReport& rec);

struct RunOptions {
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::ostream* log = nullptr;
};

struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  std::string tool_version;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::pair<std::string, std::string>> files;  // (name, sha256)
  double wall_clock = 0.0;
  std::vector<std::string> warnings;
  std::vector<std::string> open_questions;
  bool assertions_passed = true;

  nlohmann::json to_json() const;
};

/// Runs one subcommand, writing its artifacts, summary.json and manifest.json
/// under options.out.
RunManifest run_experiment(const ExperimentConfig& config, const std::string& subcommand,
                           const RunOptions& options);

/// Structural invariant and trivial-example suite behind `selfcheck`.
std::vector<Assertion> run_selfcheck(int workers);

}  // namespace collab
