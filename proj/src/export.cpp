// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cfgctrl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string trace_csv(const RunResult& result) {
  std::string out = kTraceCsvHeader;
  out += '\n';
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& trace = result.outcomes[i].trace;
    if (!trace) continue;
    for (const auto& r : trace->records) {
      out += std::to_string(i) + ',' + std::to_string(r.step) + ',' + format_number(r.tau) + ',' +
             format_number(r.e_norm) + ',' + format_optional(r.s_norm) + ',' + format_optional(r.lyapunov) + ',' +
             format_number(r.vhat_norm) + '\n';
    }
  }
  return out;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

json trace_json(const RunResult& result) {
  json runs = json::array();
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& o = result.outcomes[i];
    json run = {{"run_id", i}};
    if (!o.trace) {
      run["diverged"] = true;
      run["divergence_step"] = o.divergence_step ? json(*o.divergence_step) : json(nullptr);
      run["failure"] = o.failure;
      runs.push_back(std::move(run));
      continue;
    }
    run["diverged"] = false;
    run["x_initial"] = vec_json(o.trace->x_initial);
    run["x_final"] = vec_json(o.trace->x_final);
    json records = json::array();
    for (const auto& r : o.trace->records) {
      json rec = {{"step", r.step},
                  {"tau", r.tau},
                  {"e_norm", r.e_norm},
                  {"s_norm", optional_json(r.s_norm)},
                  {"lyapunov", optional_json(r.lyapunov)},
                  {"vhat_norm", r.vhat_norm}};
      if (r.x) rec["x"] = vec_json(*r.x);
      records.push_back(std::move(rec));
    }
    run["records"] = std::move(records);
    runs.push_back(std::move(run));
  }
  return {{"fingerprint", result.fingerprint}, {"runs", std::move(runs)}};
}

json report_json(const QualityReport& report) {
  return {{"w2", report.w2},
          {"alignment", report.alignment},
          {"oversaturation", report.oversaturation},
          {"e_decay_ratio", optional_json(report.e_decay_ratio)},
          {"n_divergent", report.n_divergent},
          {"n_samples", report.n_samples}};
}

std::string corridor_csv(const std::vector<CorridorRow>& rows) {
  std::string out = kCorridorCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += format_number(r.k) + ',' + (r.reached ? "true" : "false") + ',' +
           (r.reach_step ? std::to_string(*r.reach_step) : std::string()) + ',' + format_optional(r.residual_band) +
           ',' + format_number(r.osc_amplitude) + '\n';
  }
  return out;
}

std::string sliding_csv(const ConvergenceReport& report, double dt) {
  std::string out = "step,t,s_norm,lyapunov\n";
  for (std::size_t n = 0; n < report.s_norm.size(); ++n) {
    out += std::to_string(n) + ',' + format_number(static_cast<double>(n) * dt) + ',' +
           format_number(report.s_norm[n]) + ',' + format_number(report.lyapunov[n]) + '\n';
  }
  return out;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

OutputWriter::OutputWriter(fs::path directory) : directory_(std::move(directory)) {}

fs::path OutputWriter::write(const std::string& name, const std::string& content) {
  const std::lock_guard lock(mutex_);
  fs::create_directories(directory_);
  const fs::path target = directory_ / name;
  if (fs::exists(target)) {
    std::ifstream in(target, std::ios::binary);
    std::ostringstream existing;
    existing << in.rdbuf();
    if (existing.str() != content) {
      throw OutputConflictError("refusing to overwrite " + target.string() + " with different content");
    }
    written_.push_back(target);
    return target;
  }
  const fs::path tmp = directory_ / ("." + name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
  written_.push_back(target);
  return target;
}

}  // namespace cfgctrl
