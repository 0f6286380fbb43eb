#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "fieldroad/harness.hpp"
#include "fieldroad/output.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Exclusion process on a cylinder coupled to a road, its field-road limit, and checks"};
  app.set_version_flag("--version", std::string(fieldroad::artifact_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned workers = 0;

  const char* kinds[] = {"simulate", "pde", "converge", "oracle", "dirichlet-check", "diagnostics"};
  for (const char* kind : kinds) {
    CLI::App* sub = app.add_subcommand(kind, std::string("run the ") + kind + " experiment");
    sub->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    fieldroad::ExperimentConfig config = fieldroad::load_config(config_path);
    config.kind = fieldroad::parse_kind(sub->get_name());
    if (sub->count("--seed")) config.seed = seed;
    if (sub->count("--out")) config.out_dir = out_dir;
    if (sub->count("--workers")) config.workers = workers;
    return fieldroad::run_experiment(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
