#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fsi/driver.hpp"
#include "fsi/error.hpp"

namespace fsi {

struct RunConfig {
  SchemeParams params;
  Preset preset = Preset::FallingDisk;
  std::string output_dir = "out";
  int snapshot_every = 0;
  bool write_vtk = false;
  std::vector<double> collar_widths;  // in fluid cells

  bool operator==(const RunConfig&) const = default;
};

struct ConfigIssue {
  int line = 0;    // 1-based, 0 when the rule concerns a default value
  int column = 0;  // 1-based
  std::string message;
};

std::string format_issue(const ConfigIssue& issue);

class ConfigError : public InvalidArgumentError {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct ParsedConfig {
  RunConfig config;
  std::vector<ConfigIssue> warnings;
};

// key = value lines, '#' starts a comment. Throws ConfigError with every
// syntax and validation error found.
ParsedConfig parse_config(std::string_view text);
ParsedConfig load_config(const std::string& path);

// Every key, one per line; parse_config(write_config(c)).config == c for any
// parsed c.
std::string write_config(const RunConfig& config);

std::vector<std::string> config_keys();

}  // namespace fsi
