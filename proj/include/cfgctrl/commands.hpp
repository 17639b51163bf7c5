// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfgctrl/config.hpp"
#include "cfgctrl/control_lab.hpp"

namespace cfgctrl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

/// Overrides shared by the config-driven commands.
struct RunOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::string>> formats;
  /// Controller type names for compare; empty uses the config's compare block.
  std::vector<std::string> controllers;
};

struct SynthOptions {
  double delta = 0.5;
  double rho = 0.1;
  double w = 2.0;
  double k = 1.0;
  int dim = 2;
  double dt = 0.01;
  int steps = 2000;
  double s0 = 5.0;
  DriftKind drift = DriftKind::kConstant;
  GainDeviationKind deviation = GainDeviationKind::kRotation;
  std::uint64_t seed = 0;
  bool corridor = false;
  /// Gains for the corridor sweep; empty picks a grid around the corridor.
  std::vector<double> k_values;
  std::filesystem::path out = "out";
  std::vector<std::string> formats = {"csv", "json", "svg"};
};

/// Applies RunOptions overrides to a loaded config.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts);

/// First step whose sliding norm is within 1.5·Δτ·w·k, absent for traces
/// without a sliding variable or that never reach it.
std::optional<int> trace_reach_step(const Trace& trace, const SmcParams& params, double dtau);

/// Controller list for compare: named types take the config's controller
/// when the type matches and defaults at its guidance scale otherwise.
std::vector<ControlParams> resolve_compare_controllers(const ExperimentConfig& cfg,
                                                       const std::vector<std::string>& names);

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfgctrl
