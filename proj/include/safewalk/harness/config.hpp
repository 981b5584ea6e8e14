#pragma once

// Experiment configuration: an INI file with [experiment], [sac] and [env]
// sections. Every key has a default; unknown sections or keys are errors.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "safewalk/tasks/session.hpp"

namespace safewalk::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  tasks::SessionConfig session;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// Divides the per-task budget by four.
  bool quick = false;

  /// Session for one seed with the effective budget applied.
  tasks::SessionConfig session_for(std::uint64_t seed) const;
  std::size_t effective_steps_per_task() const;
  /// Throws ConfigError with the offending key.
  void validate() const;
};

/// One documented key, e.g. "sac.batch_size".
struct ConfigKey {
  std::string name;
  std::string help;
};

const std::vector<ConfigKey>& config_keys();

/// Applies "section.key=value". Throws ConfigError naming the key.
void apply_override(ExperimentConfig& config, const std::string& assignment);
void set_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string get_value(const ExperimentConfig& config, const std::string& key);

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Canonical INI text listing every key; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& config);

}  // namespace safewalk::harness
