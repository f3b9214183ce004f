#pragma once

#include <filesystem>
#include <stdexcept>

#include "sc/experiments.hpp"

namespace sc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict INI-style configuration: [section] headers, key = value lines,
/// '#' comments. Unknown sections or keys are errors.
ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace sc
