#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "bvmdp/errors.h"
#include "bvmdp/experiments.h"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::string registry_help() {
  std::string s = "\nExperiments and records.csv columns:\n";
  for (const auto& e : bvmdp::experiment_registry()) {
    s += "  " + e.name + "\n      " + e.description + "\n      columns: " + e.csv_columns + "\n";
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo checks for Dirichlet-process posterior limits"};
  app.footer(registry_help());
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  std::string config_path;
  bvmdp::ConfigOverrides overrides;
  run->add_option("config", config_path, "Path to the JSON config")->required();
  run->add_option("--seed", overrides.seed, "Override the root seed");
  run->add_option("--n", overrides.n, "Override the sample size (replaces n_list)");
  run->add_option("--reps", overrides.reps, "Override the replication count");
  run->add_option("--out", overrides.out, "Override the output directory");
  run->add_option("--workers", overrides.workers, "Worker threads (outputs do not depend on it)");

  auto* report = app.add_subcommand("report", "Consolidate verdicts from manifests");
  std::vector<std::string> manifests;
  std::string csv_path;
  report->add_option("manifests", manifests, "manifest.json files");
  report->add_option("--csv", csv_path, "Also write the table as CSV to this path");

  app.add_subcommand("list", "List registered experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto json = bvmdp::apply_overrides(bvmdp::read_json_file(config_path), overrides);
      const auto config = bvmdp::parse_config(json);
      const auto manifest = bvmdp::run_experiment(config);
      bvmdp::Report r;
      for (const auto& v : manifest.verdicts) r.rows.push_back({config.out, v});
      bvmdp::write_report_text(std::cout, r);
      std::cout << "wrote " << config.out << "/manifest.json\n";
      return manifest.all_pass() ? 0 : kExitFail;
    }
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(manifests.begin(), manifests.end());
      const auto r = bvmdp::build_report(paths);
      bvmdp::write_report_text(std::cout, r);
      if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw bvmdp::FilesystemError(csv_path, "cannot open for writing");
        bvmdp::write_report_csv(out, r);
      }
      return r.all_pass() ? 0 : kExitFail;
    }
    for (const auto& e : bvmdp::experiment_registry()) {
      std::cout << e.name << "\t" << e.description << "\n";
    }
    return 0;
  } catch (const bvmdp::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
