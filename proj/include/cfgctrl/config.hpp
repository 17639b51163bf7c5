// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfgctrl/flow_systems.hpp"
#include "cfgctrl/guidance.hpp"
#include "cfgctrl/sampler.hpp"

namespace cfgctrl {

/// Invalid configuration. what() reads "<source>:<line>: <pointer>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, std::optional<int> line, const std::string& message, const std::string& source);

  const std::string& pointer() const { return pointer_; }
  std::optional<int> line() const { return line_; }

 private:
  std::string pointer_;
  std::optional<int> line_;
};

struct ComponentConfig {
  double weight = 1.0;
  std::vector<double> mean;
  /// Exactly one of the two covariance forms is non-empty.
  std::vector<double> cov_diag;
  std::vector<std::vector<double>> cov_lower;

  Mat covariance() const;
  bool operator==(const ComponentConfig&) const = default;
};

struct SystemConfig {
  std::vector<ComponentConfig> components;
  std::map<std::string, std::vector<std::size_t>> conditions;
  std::string target_condition;
  bool operator==(const SystemConfig&) const = default;
};

struct SamplerConfig {
  Scheme scheme = Scheme::kEuler;
  int steps = 100;
  int trajectories = 50;
  std::uint64_t seed = 0;
  bool record_x = false;
  double tau_clamp = 1e-4;
  bool operator==(const SamplerConfig&) const = default;
};

enum class SweepParameter { kW, kLambda, kK };

std::string_view to_string(SweepParameter p);

struct SweepConfig {
  SweepParameter parameter = SweepParameter::kW;
  std::vector<double> values;
  bool operator==(const SweepConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv", "json", "svg"};
  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  SystemConfig system;
  ControlParams controller = SmcParams{};
  /// Controller list for the compare command; may be empty.
  std::vector<ControlParams> compare;
  SamplerConfig sampler;
  std::optional<SweepConfig> sweep;
  OutputConfig output;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates a config document. `source` names the document in
/// error messages.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const ControlParams& params);
/// Parses one controller block; `pointer` and `index` locate it for errors.
ControlParams controller_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a of the canonical JSON dump, excluding the output block.
std::uint64_t config_fingerprint(const ExperimentConfig& cfg);
std::string fingerprint_hex(std::uint64_t fp);

FlowSystem build_system(const SystemConfig& sys);

BatchSpec make_batch_spec(const ExperimentConfig& cfg);

/// Returns `params` with the swept parameter replaced. w maps to w_max for
/// weight schedules. Throws GuidanceError when the variant has no such
/// parameter.
ControlParams with_swept_value(const ControlParams& params, SweepParameter p, double value);

/// Defaults for a controller type at guidance scale w.
ControlParams default_controller(ControlKind kind, double w);

}  // namespace cfgctrl
