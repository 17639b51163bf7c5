// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfgctrl/flow_systems.hpp"
#include "cfgctrl/guidance.hpp"

namespace cfgctrl {

enum class Scheme { kEuler, kHeun };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

struct IntegratorSpec {
  Scheme scheme = Scheme::kEuler;
  int steps = 100;
  double tau_clamp = 1e-4;

  void validate() const;
  double step_size() const { return (1.0 - 2.0 * tau_clamp) / steps; }
  double tau_at(int step) const { return tau_clamp + step * step_size(); }
};

struct TraceRecord {
  int step = 0;
  double tau = 0.0;
  double e_norm = 0.0;
  std::optional<double> s_norm;
  std::optional<double> lyapunov;
  double vhat_norm = 0.0;
  std::optional<Vec> x;
};

struct Trace {
  std::vector<TraceRecord> records;
  Vec x_final;
  Vec x_initial;
};

/// Raised when a trajectory leaves the finite region; carries the step.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, const std::string& what);
  int step() const { return step_; }

 private:
  int step_;
};

inline constexpr double kDivergenceRadius = 1e6;

/// Integrates one guided trajectory from a standard normal draw. The law is
/// reset before the first step. Throws DivergenceError when ‖x‖ exceeds
/// kDivergenceRadius or any quantity turns non-finite.
Trace sample_trajectory(const FlowSystem& sys, ControlLaw& law, const IntegratorSpec& integ, const Condition& cond,
                        Rng& rng, bool record_x = false);

struct BatchSpec {
  ControlParams controller = SmcParams{};
  IntegratorSpec integrator;
  Condition condition;
  int trajectories = 1;
  std::uint64_t seed = 0;
  bool record_x = false;
  /// 0 picks the CFGCTRL_THREADS environment variable, else hardware threads.
  int threads = 0;
  /// Identifies the configuration that produced the batch.
  std::uint64_t fingerprint = 0;
};

struct TrajectoryOutcome {
  std::optional<Trace> trace;
  std::optional<int> divergence_step;
  std::string failure;
  bool diverged() const { return !trace.has_value(); }
};

struct RunResult {
  std::vector<TrajectoryOutcome> outcomes;
  std::uint64_t fingerprint = 0;

  std::size_t divergent_count() const;
  /// Final samples of non-divergent trajectories, in trajectory order.
  std::vector<Vec> final_samples() const;
  std::vector<const Trace*> traces() const;
};

/// Trajectory i draws from Rng(seed, i), so results do not depend on how
/// trajectories are scheduled across workers.
RunResult run_batch(const FlowSystem& sys, const BatchSpec& spec);

/// Worker count from CFGCTRL_THREADS, falling back to hardware concurrency.
int default_thread_count();

}  // namespace cfgctrl
