#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "schwarz/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"schwarzlab: Schwarz methods by domain truncation"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  long long seed = -1;
  int jobs = 0;
  std::vector<std::string> sets;

  const char* names[] = {"rho2", "opt2", "chain", "sweep", "grid", "blocklu"};
  const char* descs[] = {
      "two-subdomain convergence factor over the transverse frequencies",
      "optimized Robin parameter over a ladder of overlaps",
      "spectral radius of a many-subdomain iteration",
      "scaling ladder with a log-log fit",
      "discrete 2D Schwarz iteration on the unit box",
      "exact block-LU sweep on the base partition"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("-c,--config", config_path, "key = value config file");
    sub->add_option("-o,--out", out_path, "output CSV path");
    sub->add_option("--seed", seed, "RNG seed for stochastic optimizers");
    sub->add_option("--jobs", jobs, "worker threads for independent points");
    sub->add_option("--set", sets, "extra key=value assignments")
        ->take_all();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    schwarz::cli::RunConfig cfg;
    if (!config_path.empty())
      cfg = schwarz::cli::RunConfig::from_file(config_path);
    for (const std::string& kv : sets) cfg.assign(kv);
    if (!out_path.empty()) cfg.set("out", out_path);
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    if (jobs > 0) cfg.set("jobs", std::to_string(jobs));
    return schwarz::cli::run(app.get_subcommands().front()->get_name(), cfg,
                             std::cerr);
  } catch (const schwarz::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return schwarz::cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return schwarz::cli::kExitNumeric;
  }
}
