// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfgctrl/numerics.hpp"

namespace cfgctrl {

class ControlLabError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drift Φ(t) with ‖Φ(t)‖₂ ≤ δ.
enum class DriftKind { kConstant, kSinusoidal, kNoise };
/// Gain deviation ΔΓ(t) with ‖ΔΓ(t)‖₂ ≤ ρ.
enum class GainDeviationKind { kZero, kRotation, kSeeded };

std::string_view to_string(DriftKind kind);
std::string_view to_string(GainDeviationKind kind);
DriftKind drift_kind_from_string(std::string_view name);
GainDeviationKind gain_deviation_kind_from_string(std::string_view name);

/// Euler-discretized sliding-variable dynamics
///   s_{n+1} = s_n + Δt·(Φ(t_n) + (w·I + ΔΓ(t_n))·(−k·sign(s_n))).
struct PerturbedDynamics {
  int dim = 1;
  DriftKind drift = DriftKind::kConstant;
  GainDeviationKind deviation = GainDeviationKind::kZero;
  /// Redraw ΔΓ every step instead of once per run.
  bool per_step_deviation = false;
  double w = 1.0;
  double delta = 0.0;
  double rho = 0.0;
  double k = 1.0;
  double dt = 0.01;
  /// Angular frequency of the sinusoidal drift.
  double drift_frequency = 2.0;
  Vec s0 = Vec::Constant(1, 5.0);
  std::uint64_t seed = 0;

  void validate() const;
  /// φ = w − ρ·√D.
  double dominance_margin() const;
  /// k·φ > δ.
  bool gain_condition_met() const;
};

struct ConvergenceReport {
  bool gain_condition_met = false;
  bool reached = false;
  std::optional<int> reach_step;
  /// ‖s₀‖/η expressed in steps; absent when the gain condition fails.
  std::optional<double> bound_steps;
  /// η = ε·φ with k = δ/φ + ε.
  std::optional<double> eta;
  /// k·b_min − δ with b_min = w − ρ·√D; equal to eta by construction.
  std::optional<double> eta_main;
  double band = 0.0;
  std::vector<double> s_norm;
  std::vector<double> lyapunov;
  /// Largest single-step increase of V after the band was first reached.
  double max_v_increase_after_reach = 0.0;
  /// Largest ‖Φ‖₂ and ‖ΔΓ‖₂ realized during the run.
  double max_drift_norm = 0.0;
  double max_deviation_norm = 0.0;
};

/// Band a sign-switched discrete system can hold: 1.5·Δt·w·k.
double discrete_band(double dt, double w, double k);

ConvergenceReport simulate_sliding(const PerturbedDynamics& dyn, int steps);

struct Corridor {
  double k_min = 0.0;
  double k_max = 0.0;
  bool feasible() const { return k_min < k_max; }
};

/// (δ/w, 2‖s‖/(w·Δt)). Inputs must be positive, except δ which may be 0.
Corridor stability_corridor(double delta_est, double w, double s_norm, double dt);

struct CorridorRow {
  double k = 0.0;
  bool reached = false;
  std::optional<int> reach_step;
  /// Largest ‖s‖ after first reaching the band, absent when never reached.
  std::optional<double> residual_band;
  /// Largest ‖s‖ over the second half of the run.
  double osc_amplitude = 0.0;
};

std::vector<CorridorRow> corridor_sweep(const PerturbedDynamics& tmpl, const std::vector<double>& k_values, int steps);

/// Plug-in drift estimate max_n ‖(s_{n+1} − s_n)/Δτ + w·k·sign(s_n)‖ from a
/// sequence of sliding variables.
double estimate_drift(const std::vector<Vec>& surfaces, double dtau, double w, double k);

}  // namespace cfgctrl
