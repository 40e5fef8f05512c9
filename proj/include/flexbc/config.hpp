#pragma once

#include "flexbc/harness.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace flexbc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Experiment file (INI dialect, version 1):
//
//   ; comment
//   [experiment NAME]
//   kind = point_force | microcrack | fig5
//   geometry.r_a = 5
//   ...
//
// Every section is one experiment; keys outside the list in config_keys() are rejected.
std::vector<ExperimentSpec> load_config(const std::string& path);
std::vector<ExperimentSpec> parse_config(const std::string& text);

// Defaults applied before the keys of a section are read.
ExperimentSpec default_spec(ExperimentKind kind);

const std::vector<std::string>& config_keys();

// "default" or a comma-separated list of TOL:TOL_a pairs.
ToleranceSchedule parse_schedule(const std::string& s);

}  // namespace flexbc
