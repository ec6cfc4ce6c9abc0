#pragma once

#include <deproj/experiments/experiments.hpp>

#include <optional>
#include <string>

namespace deproj {

/// Everything a command can be configured with. Every field has a default;
/// a config file only lists what it changes.
struct RunConfig {
  ScenarioConfig scenario;            // model, dictionary and simulation settings
  FitOptions solver;
  std::optional<double> alpha1;       // empty: 1/sqrt(pi log P)
  std::optional<double> alpha2;       // empty: 1/N^2
  int m0 = 100;
  TailFit tail_fit = TailFit::kAuto;
  std::optional<double> lambda1;      // skip QUT when both are given
  std::optional<double> lambda2;
  BootstrapOptions bootstrap;

  /// QUT settings with the level defaults resolved for the image size.
  QutConfig qut_config() const;
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses YAML text. Errors carry "<source>:<line>:<column>: " prefixes.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");

RunConfig load_run_config(const std::string& path);

/// Full YAML dump of the effective configuration.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace deproj
