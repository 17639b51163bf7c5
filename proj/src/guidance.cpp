// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/guidance.hpp"

#include <cmath>
#include <numbers>

namespace cfgctrl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dims(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw GuidanceError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
}

}  // namespace

void StepContext::validate() const {
  if (total_steps < 1 || index < 0 || index >= total_steps) throw GuidanceError("step index outside [0, S)");
  if (!(dtau > 0.0)) throw GuidanceError("step size must be positive");
  if (!(w >= 0.0)) throw GuidanceError("guidance scale must be non-negative");
}

Vec cfg_combine(const Vec& v_c, const Vec& v_u, double w) {
  require_dims(v_c, v_u, "cfg_combine");
  return v_u + w * (v_c - v_u);
}

std::string_view to_string(ScheduleShape shape) { return shape == ScheduleShape::kLinear ? "linear" : "cosine"; }

ScheduleShape schedule_shape_from_string(std::string_view name) {
  if (name == "linear") return ScheduleShape::kLinear;
  if (name == "cosine") return ScheduleShape::kCosine;
  throw GuidanceError("unknown schedule shape '" + std::string(name) + "'");
}

double weight_schedule(const StepContext& ctx, ScheduleShape shape, double w_max) {
  if (!(w_max >= 1.0)) throw GuidanceError("weight schedule needs w_max >= 1");
  if (ctx.total_steps < 1 || ctx.index < 0 || ctx.index >= ctx.total_steps) {
    throw GuidanceError("step index outside [0, S)");
  }
  if (ctx.total_steps == 1) return w_max;
  const double p = static_cast<double>(ctx.index) / static_cast<double>(ctx.total_steps - 1);
  const double ramp = shape == ScheduleShape::kLinear ? p : 0.5 * (1.0 - std::cos(std::numbers::pi * p));
  return 1.0 + (w_max - 1.0) * ramp;
}

ApgParts apg_decompose(const Vec& v_c, const Vec& v_u) {
  require_dims(v_c, v_u, "apg_combine");
  const double norm2 = v_c.squaredNorm();
  if (!(norm2 > 0.0)) throw GuidanceError("apg_combine: conditional velocity has zero norm");
  const Vec delta = v_c - v_u;
  ApgParts parts;
  parts.parallel = (v_c.dot(delta) / norm2) * v_c;
  parts.orthogonal = delta - parts.parallel;
  return parts;
}

Vec apg_combine(const Vec& v_c, const Vec& v_u, double w, double eta) {
  if (!(eta <= 1.0)) throw GuidanceError("apg_combine: eta must be <= 1");
  const ApgParts parts = apg_decompose(v_c, v_u);
  return v_u + w * (parts.orthogonal + eta * parts.parallel);
}

double cfg_zero_star_scale(const Vec& v_c, const Vec& v_u) {
  require_dims(v_c, v_u, "cfg_zero_star_combine");
  const double norm2 = v_u.squaredNorm();
  if (!(norm2 > 0.0)) throw GuidanceError("cfg_zero_star_combine: unconditional velocity has zero norm");
  return v_c.dot(v_u) / norm2;
}

Vec cfg_zero_star_combine_with_scale(const Vec& v_c, const Vec& v_u, double w, double scale) {
  require_dims(v_c, v_u, "cfg_zero_star_combine");
  const Vec base = scale * v_u;
  return base + w * (v_c - base);
}

Vec cfg_zero_star_combine(const Vec& v_c, const Vec& v_u, double w) {
  return cfg_zero_star_combine_with_scale(v_c, v_u, w, cfg_zero_star_scale(v_c, v_u));
}

double rectified_gain(double tau, double lambda_max, double gamma) {
  // α = λ_max·(1 − t)^γ with t = 1 − τ the remaining-noise time.
  return lambda_max * std::pow(tau, gamma);
}

Vec rectified_cfgpp_combine(const VelocityEvaluator& eval, const Vec& x, const StepContext& ctx, double lambda_max,
                            double gamma, const std::optional<Vec>& v_c_here) {
  const double half = 0.5 * ctx.dtau;
  const double tau_mid = ctx.tau + half;
  if (!(half > 0.0) || !(tau_mid < 1.0)) throw GuidanceError("rectified_cfgpp: half step leaves the time grid");
  const Vec v_c = v_c_here ? *v_c_here : eval(x, ctx.tau).cond;
  if (v_c.size() != x.size()) throw GuidanceError("rectified_cfgpp: dimension mismatch");
  const Vec x_mid = x + half * v_c;
  const VelocityPair mid = eval(x_mid, tau_mid);
  require_dims(mid.cond, mid.uncond, "rectified_cfgpp");
  const double alpha = rectified_gain(ctx.tau, lambda_max, gamma);
  return v_c + alpha * (mid.cond - mid.uncond);
}

SmcOutput smc_step(const Vec& v_c, const Vec& v_u, const StepContext& ctx, const SlidingState& state) {
  require_dims(v_c, v_u, "smc_step");
  if (state.e_prev && state.e_prev->size() != v_c.size()) throw GuidanceError("smc_step: stored error dimension");
  const Vec e = v_c - v_u;
  const Vec& e_prev = state.e_prev ? *state.e_prev : e;
  Vec surface = (e - e_prev) + state.lambda * e_prev;
  const Vec switching =
      state.boundary_layer > 0.0 ? saturate_elementwise(surface, state.boundary_layer) : sign_elementwise(surface);
  Vec correction = -state.k * switching;

  SmcOutput out;
  out.v_hat = v_u + ctx.w * (e + correction);
  out.state = state;
  out.state.e_prev = e;
  out.state.last_surface = surface;
  out.diagnostics = SmcDiagnostics{std::move(surface), std::move(correction)};
  return out;
}

std::string_view to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::kCfg:
      return "cfg";
    case ControlKind::kWeightSchedule:
      return "weight_schedule";
    case ControlKind::kApg:
      return "apg";
    case ControlKind::kCfgZeroStar:
      return "cfg_zero_star";
    case ControlKind::kRectifiedCfgpp:
      return "rectified_cfgpp";
    case ControlKind::kSmc:
      return "smc";
  }
  return "unknown";
}

ControlKind control_kind_from_string(std::string_view name) {
  for (const auto kind : {ControlKind::kCfg, ControlKind::kWeightSchedule, ControlKind::kApg,
                          ControlKind::kCfgZeroStar, ControlKind::kRectifiedCfgpp, ControlKind::kSmc}) {
    if (to_string(kind) == name) return kind;
  }
  throw GuidanceError("unknown controller type '" + std::string(name) + "'");
}

ControlKind kind_of(const ControlParams& params) {
  return std::visit(Overloaded{
                        [](const CfgParams&) { return ControlKind::kCfg; },
                        [](const WeightScheduleParams&) { return ControlKind::kWeightSchedule; },
                        [](const ApgParams&) { return ControlKind::kApg; },
                        [](const CfgZeroStarParams&) { return ControlKind::kCfgZeroStar; },
                        [](const RectifiedCfgppParams&) { return ControlKind::kRectifiedCfgpp; },
                        [](const SmcParams&) { return ControlKind::kSmc; },
                    },
                    params);
}

double guidance_scale(const ControlParams& params) {
  return std::visit(Overloaded{
                        [](const WeightScheduleParams& p) { return p.w_max; },
                        [](const auto& p) { return p.w; },
                    },
                    params);
}

void validate(const ControlParams& params) {
  const auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw GuidanceError(std::string(field) + ": " + what);
  };
  std::visit(Overloaded{
                 [&](const CfgParams& p) { require(p.w >= 0.0, "w", "must be >= 0"); },
                 [&](const WeightScheduleParams& p) { require(p.w_max >= 1.0, "w_max", "must be >= 1"); },
                 [&](const ApgParams& p) {
                   require(p.w >= 0.0, "w", "must be >= 0");
                   require(p.eta <= 1.0, "eta", "must be <= 1");
                 },
                 [&](const CfgZeroStarParams& p) { require(p.w >= 0.0, "w", "must be >= 0"); },
                 [&](const RectifiedCfgppParams& p) {
                   require(p.w >= 0.0, "w", "must be >= 0");
                   require(p.gamma >= 0.0, "gamma", "must be >= 0");
                   require(std::isfinite(p.effective_lambda_max()), "lambda_max", "must be finite");
                 },
                 [&](const SmcParams& p) {
                   require(p.w >= 0.0, "w", "must be >= 0");
                   require(p.lambda > 0.0, "lambda", "must be > 0");
                   require(p.k >= 0.0, "k", "must be >= 0");
                   require(p.boundary_layer >= 0.0, "boundary_layer", "must be >= 0");
                 },
             },
             params);
}

ControlLaw::ControlLaw(ControlParams params) : params_(std::move(params)) {
  validate(params_);
  reset();
}

void ControlLaw::reset() {
  sliding_ = SlidingState{};
  if (const auto* smc = std::get_if<SmcParams>(&params_)) {
    sliding_.lambda = smc->lambda;
    sliding_.k = smc->k;
    sliding_.boundary_layer = smc->boundary_layer;
  }
}

Vec ControlLaw::apply(const Vec& v_c, const Vec& v_u, const Vec& x, const StepContext& ctx,
                      const VelocityEvaluator& eval) {
  return std::visit(Overloaded{
                        [&](const CfgParams& p) { return cfg_combine(v_c, v_u, p.w); },
                        [&](const WeightScheduleParams& p) {
                          return cfg_combine(v_c, v_u, weight_schedule(ctx, p.shape, p.w_max));
                        },
                        [&](const ApgParams& p) { return apg_combine(v_c, v_u, p.w, p.eta); },
                        [&](const CfgZeroStarParams& p) { return cfg_zero_star_combine(v_c, v_u, p.w); },
                        [&](const RectifiedCfgppParams& p) {
                          return rectified_cfgpp_combine(eval, x, ctx, p.effective_lambda_max(), p.gamma, v_c);
                        },
                        [&](const SmcParams& p) {
                          StepContext scaled = ctx;
                          scaled.w = p.w;
                          SmcOutput out = smc_step(v_c, v_u, scaled, sliding_);
                          sliding_ = std::move(out.state);
                          return out.v_hat;
                        },
                    },
                    params_);
}

Vec apply_controller(ControlLaw& law, const Vec& v_c, const Vec& v_u, const Vec& x, const StepContext& ctx,
                     const VelocityEvaluator& eval) {
  return law.apply(v_c, v_u, x, ctx, eval);
}

}  // namespace cfgctrl
