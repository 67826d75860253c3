// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` configuration files. Keys are the ScenarioConfig and
// MlgdConfig field names plus a few plan-level keys; `#` starts a comment.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "metabf/experiment.hpp"

namespace metabf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Applies every assignment in `text` on top of `plan`. Unknown keys and
// malformed values throw ConfigError naming the line.
void apply_config_text(std::string_view text, ExperimentPlan& plan);

// Applies a single key/value pair (the same keys as the file format).
void apply_config_value(std::string_view key, std::string_view value, ExperimentPlan& plan);

ExperimentPlan load_plan(const std::filesystem::path& path);

// Inverse of apply_config_text for the keys that describe a plan.
std::string render_config(const ExperimentPlan& plan);

std::vector<double> parse_real_list(std::string_view text);

}  // namespace metabf
