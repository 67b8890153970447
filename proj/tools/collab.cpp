// collab: command-line front end for the experiment runners.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "collab/errors.hpp"
#include "collab/experiment.hpp"

int main(int argc, char** argv) {
  using namespace collab;
  CLI::App app{"Collision-rate experiments for coupled expanding-map lattices"};
  app.set_version_flag("--version", std::string(COLLAB_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int workers = 0;

  for (const char* name : subcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "master seed (overrides run.seed)");
    sub->add_option("--workers", workers, "worker threads (else COLLAB_WORKERS, else all cores)")
        ->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_schema;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (subcommand == "example" || subcommand == "selfcheck") {
      cfg = parse_config(default_config());
    } else {
      std::cerr << "error: " << subcommand << " needs --config\n";
      return exit_schema;
    }
    RunOptions opts;
    opts.out = out_dir;
    if (sub->count("--seed")) opts.seed = seed;
    opts.workers = workers;
    opts.log = &std::cout;
    const RunManifest m = run_experiment(cfg, subcommand, opts);
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
    if (!m.assertions_passed) {
      std::cerr << subcommand << ": assertion failures, see " << out_dir << "\n";
      return exit_assertion;
    }
    return exit_ok;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_schema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
}
