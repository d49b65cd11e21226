// ncmd: run experiment configurations and list the experiment catalog.
//
// Output directory: --out, else $NCMD_OUT_DIR, else the config's `output`
// field, else the working directory.

#include <cstdlib>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "ncmd/config.hpp"
#include "ncmd/experiments.hpp"
#include "ncmd/rng.hpp"

namespace {

void print_catalog() {
  for (const auto& f : ncmd::catalog()) {
    std::cout << f.id << "\n  " << f.summary << "\n  statement: " << f.statement << "\n  required:";
    for (const auto& r : f.required) std::cout << " " << r;
    std::cout << "\n  optional:";
    for (const auto& o : f.optional) std::cout << " " << o;
    std::cout << "\n";
  }
}

std::filesystem::path output_dir(const std::string& flag, const ncmd::ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("NCMD_OUT_DIR"); env && *env) return env;
  if (cfg.output) return *cfg.output;
  return ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate functions, scaled cumulant limits and weak limits: config-driven checks"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "Print the experiment families and their fields");
  std::string template_family;
  list->add_option("--template", template_family, "Print a configuration template for FAMILY");

  auto* run = app.add_subcommand("run", "Run one or more configuration files");
  std::vector<std::string> paths;
  std::string out;
  unsigned threads = 1;
  std::uint64_t seed_override = 0;
  bool validate_only = false;
  run->add_option("paths", paths, "Configuration files")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory");
  run->add_option("--threads", threads, "Worker threads for sampling")->check(CLI::Range(1u, 1024u));
  auto* seed_opt = run->add_option("--seed-override", seed_override, "Replace the seed of every configuration");
  run->add_flag("--validate-only", validate_only, "Check the configurations without running them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    if (!template_family.empty()) {
      try {
        std::cout << ncmd::template_config(template_family);
      } catch (const std::invalid_argument& e) {
        std::cerr << "ncmd: " << e.what() << "\n";
        return 2;
      }
      return 0;
    }
    print_catalog();
    return 0;
  }

  ncmd::set_default_threads(threads);
  ncmd::RunOptions options;
  if (seed_opt->count() > 0) options.seed_override = seed_override;

  // Every file is validated before anything runs.
  std::vector<ncmd::ExperimentConfig> configs;
  try {
    for (const auto& p : paths) {
      configs.push_back(ncmd::load_config(p));
      ncmd::RunOptions check = options;
      check.validate_only = true;
      ncmd::run_experiment(configs.back(), check);
    }
  } catch (const ncmd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (validate_only) {
    for (const auto& c : configs) std::cout << "OK   " << c.source << "\n";
    return 0;
  }

  bool all_pass = true;
  for (const auto& cfg : configs) {
    ncmd::RunReport report;
    try {
      report = ncmd::run_experiment(cfg, options);
    } catch (const ncmd::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    const auto dir = output_dir(out, cfg);
    try {
      ncmd::write_report(report, dir);
    } catch (const std::exception& e) {
      std::cerr << "ncmd: " << e.what() << "\n";
      return 1;
    }
    for (const auto& v : report.verdicts)
      std::cout << (v.pass ? "PASS " : "FAIL ") << report.id << " " << v.check << ": " << v.detail << "\n";
    all_pass = all_pass && report.pass();
  }
  return all_pass ? 0 : 1;
}
