#pragma once

// Registry of experiment families and the runner that turns a configuration
// into a RunReport.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncmd/config.hpp"
#include "ncmd/report.hpp"

namespace ncmd {

struct FamilyInfo {
  std::string id;
  std::string summary;
  std::string statement;  // the limit statement the family exercises
  std::vector<std::string> required;
  std::vector<std::string> optional;
};

const std::vector<FamilyInfo>& catalog();
const FamilyInfo* find_family(const std::string& id);

/// A small configuration for `family` that validates.
std::string template_config(const std::string& family);

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  bool validate_only = false;  // parse and check every field, compute nothing
};

/// Throws ConfigError for invalid configurations before any computation.
RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Seed of a named check within a run.
std::uint64_t check_seed(std::uint64_t run_seed, const std::string& check);

}  // namespace ncmd
