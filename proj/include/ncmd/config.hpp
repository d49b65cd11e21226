#pragma once

// Experiment configuration files (YAML) and their diagnostics.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace ncmd {

/// Invalid configuration, located by file, line and dotted field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, std::string field, const std::string& message);

  const std::string& source() const { return source_; }
  int line() const { return line_; }  // 1-based, 0 when unknown
  const std::string& field() const { return field_; }

 private:
  std::string source_;
  int line_;
  std::string field_;
};

namespace detail {
struct ConfigDocument;
}

/// Top-level header fields plus the parsed document; family parameters are
/// read and validated when the experiment is prepared.
struct ExperimentConfig {
  std::string id;
  std::string family;
  std::uint64_t seed = 0;
  std::optional<std::string> output;
  std::string source;  // path or label used in diagnostics
  std::shared_ptr<const detail::ConfigDocument> document;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ncmd
