// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cfgctrl/numerics.hpp"

namespace cfgctrl {

class GuidanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete sampler position handed to a control law. τ increases from noise
/// (0) to data (1).
struct StepContext {
  int index = 0;
  int total_steps = 1;
  double tau = 0.0;
  double dtau = 0.0;
  double w = 1.0;

  void validate() const;
};

struct VelocityPair {
  Vec cond;
  Vec uncond;
};

/// Evaluates (v_c, v_u) at an arbitrary state and time. Used by predictive
/// controllers that look ahead of the current state.
using VelocityEvaluator = std::function<VelocityPair(const Vec& x, double tau)>;

// Control laws. Each one is u = K·Π(e) around the unconditional velocity.

/// Proportional guidance v_u + w·(v_c − v_u).
Vec cfg_combine(const Vec& v_c, const Vec& v_u, double w);

enum class ScheduleShape { kLinear, kCosine };

std::string_view to_string(ScheduleShape shape);
ScheduleShape schedule_shape_from_string(std::string_view name);

/// Guidance weight ramp from 1 at the first step to w_max at the last.
double weight_schedule(const StepContext& ctx, ScheduleShape shape, double w_max);

struct ApgParts {
  Vec parallel;
  Vec orthogonal;
};

/// Split Δv = v_c − v_u into components parallel and orthogonal to v_c.
ApgParts apg_decompose(const Vec& v_c, const Vec& v_u);

Vec apg_combine(const Vec& v_c, const Vec& v_u, double w, double eta);

/// Least-squares scale s★ = ⟨v_c, v_u⟩ / ‖v_u‖².
double cfg_zero_star_scale(const Vec& v_c, const Vec& v_u);

Vec cfg_zero_star_combine(const Vec& v_c, const Vec& v_u, double w);

/// CFG-Zero★ output for a given scale; s★ = 1 reduces to cfg_combine.
Vec cfg_zero_star_combine_with_scale(const Vec& v_c, const Vec& v_u, double w, double scale);

/// Gain α = λ_max·τ^γ (the remaining-noise time is 1 − τ).
double rectified_gain(double tau, double lambda_max, double gamma);

/// Predictor half step along v_c, then v_c(x, τ) + α·Δv at the midpoint.
/// `v_c_here` may carry an already evaluated v_c(x, τ).
Vec rectified_cfgpp_combine(const VelocityEvaluator& eval, const Vec& x, const StepContext& ctx, double lambda_max,
                            double gamma, const std::optional<Vec>& v_c_here = std::nullopt);

struct SlidingState {
  double lambda = 6.0;
  double k = 0.1;
  /// Saturation width; 0 selects the pure sign switching law.
  double boundary_layer = 0.0;
  std::optional<Vec> e_prev;
  std::optional<Vec> last_surface;
};

struct SmcDiagnostics {
  Vec surface;
  Vec correction;
};

struct SmcOutput {
  Vec v_hat;
  SlidingState state;
  SmcDiagnostics diagnostics;
};

/// One step of the sliding-mode guidance law. The previous error is the raw
/// measured error of the previous step, and the difference is not divided by
/// the step size.
SmcOutput smc_step(const Vec& v_c, const Vec& v_u, const StepContext& ctx, const SlidingState& state);

enum class ControlKind { kCfg, kWeightSchedule, kApg, kCfgZeroStar, kRectifiedCfgpp, kSmc };

std::string_view to_string(ControlKind kind);
/// Throws GuidanceError naming the unknown tag.
ControlKind control_kind_from_string(std::string_view name);

struct CfgParams {
  double w = 5.0;
  bool operator==(const CfgParams&) const = default;
};

struct WeightScheduleParams {
  double w_max = 5.0;
  ScheduleShape shape = ScheduleShape::kLinear;
  bool operator==(const WeightScheduleParams&) const = default;
};

struct ApgParams {
  double w = 5.0;
  double eta = 0.0;
  bool operator==(const ApgParams&) const = default;
};

struct CfgZeroStarParams {
  double w = 5.0;
  bool operator==(const CfgZeroStarParams&) const = default;
};

struct RectifiedCfgppParams {
  double w = 5.0;
  /// Defaults to w − 1 when absent.
  std::optional<double> lambda_max;
  double gamma = 1.0;
  double effective_lambda_max() const { return lambda_max.value_or(w - 1.0); }
  bool operator==(const RectifiedCfgppParams&) const = default;
};

struct SmcParams {
  double w = 5.0;
  double lambda = 6.0;
  double k = 0.1;
  double boundary_layer = 0.0;
  bool operator==(const SmcParams&) const = default;
};

using ControlParams =
    std::variant<CfgParams, WeightScheduleParams, ApgParams, CfgZeroStarParams, RectifiedCfgppParams, SmcParams>;

ControlKind kind_of(const ControlParams& params);

/// Nominal guidance scale of a parameter set (w_max for schedules).
double guidance_scale(const ControlParams& params);

/// Validates parameter ranges; throws GuidanceError naming the field.
void validate(const ControlParams& params);

/// A guidance controller bound to one trajectory at a time. Only the SMC
/// variant carries state; reset() clears it between trajectories.
class ControlLaw {
 public:
  explicit ControlLaw(ControlParams params);

  ControlKind kind() const { return kind_of(params_); }
  const ControlParams& params() const { return params_; }
  double scale() const { return guidance_scale(params_); }

  void reset();

  /// Guided velocity for the current step. `eval` is only queried by the
  /// predictive variant.
  Vec apply(const Vec& v_c, const Vec& v_u, const Vec& x, const StepContext& ctx, const VelocityEvaluator& eval);

  /// Sliding variable of the most recent SMC step, absent for other variants.
  const std::optional<Vec>& last_surface() const { return sliding_.last_surface; }

 private:
  ControlParams params_;
  SlidingState sliding_;
};

Vec apply_controller(ControlLaw& law, const Vec& v_c, const Vec& v_u, const Vec& x, const StepContext& ctx,
                     const VelocityEvaluator& eval);

}  // namespace cfgctrl
