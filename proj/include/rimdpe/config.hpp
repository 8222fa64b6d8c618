#pragma once

#include <stdexcept>
#include <string>

#include "rimdpe/harness.hpp"

namespace rimdpe {

/// Bad config file: unreadable, malformed, unknown key or invalid value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Overlays the keys present in the JSON document `text` onto `base`.
/// Keys not present keep their value from `base`; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base);

/// Same, reading from `path`. Errors carry the path.
ExperimentConfig load_config(const std::string& path, ExperimentConfig base);

/// Full JSON document for `config`; parse_config(dump_config(c), {}) == c.
std::string dump_config(const ExperimentConfig& config);

}  // namespace rimdpe
