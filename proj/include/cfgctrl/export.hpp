// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfgctrl/control_lab.hpp"
#include "cfgctrl/metrics.hpp"
#include "cfgctrl/sampler.hpp"

namespace cfgctrl {

/// Shortest decimal form that round-trips, "nan"/"inf" for non-finite values.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

inline constexpr const char* kTraceCsvHeader = "run_id,step,tau,e_norm,s_norm,lyapunov,vhat_norm";
inline constexpr const char* kCorridorCsvHeader = "k,reached,reach_step,residual_band,osc_amplitude";

/// One row per recorded step of every non-divergent trajectory. run_id is the
/// trajectory index; absent values are empty fields.
std::string trace_csv(const RunResult& result);
nlohmann::json trace_json(const RunResult& result);
nlohmann::json report_json(const QualityReport& report);
std::string corridor_csv(const std::vector<CorridorRow>& rows);
std::string sliding_csv(const ConvergenceReport& report, double dt);

std::string dump_json(const nlohmann::json& j);

class OutputConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serializes artifact writes. A file that already exists is left alone when
/// its bytes match and rejected with OutputConflictError when they differ.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path directory);

  std::filesystem::path write(const std::string& name, const std::string& content);
  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  std::filesystem::path directory_;
  std::mutex mutex_;
  std::vector<std::filesystem::path> written_;
};

}  // namespace cfgctrl
