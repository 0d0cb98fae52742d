// Command-line driver: run JSON-configured experiments, validate configs, and
// list the built-in presets.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "holoray/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Geodesic ray-transform experiments on surfaces"};
  app.require_subcommand(1);

  std::string run_path;
  CLI::App* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("config", run_path, "Path to a JSON config file")->required();

  std::string check_path;
  CLI::App* check =
      app.add_subcommand("check", "Validate a config without running it");
  check->add_option("config", check_path, "Path to a JSON config file")
      ->required();

  CLI::App* list =
      app.add_subcommand("list-presets", "List models, pairs and experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      std::fputs(holoray::list_presets_text().c_str(), stdout);
      return 0;
    }
    if (check->parsed()) {
      holoray::ExperimentConfig cfg = holoray::load_config(check_path);
      std::printf("OK: %s experiment on %s/%s, grid %dx%dx%d\n",
                  cfg.experiment.c_str(), cfg.model.c_str(), cfg.pair.c_str(),
                  cfg.n1, cfg.n2, cfg.ntheta);
      return 0;
    }
    holoray::ExperimentConfig cfg = holoray::load_config(run_path);
    int status = holoray::run_experiment(cfg);
    if (status == 0)
      std::printf("PASS: %s (outputs in %s)\n", cfg.experiment.c_str(),
                  cfg.output_dir.c_str());
    else
      std::printf("FAIL: %s (see %s/summary.json)\n", cfg.experiment.c_str(),
                  cfg.output_dir.c_str());
    return status;
  } catch (const holoray::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
