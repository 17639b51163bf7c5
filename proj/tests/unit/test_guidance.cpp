// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cfgctrl/flow_systems.hpp"
#include "cfgctrl/guidance.hpp"

using namespace cfgctrl;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

StepContext ctx_at(int index, int total, double w) {
  const double dtau = 1.0 / total;
  return StepContext{index, total, index * dtau, dtau, w};
}

VelocityEvaluator evaluator_for(const FlowSystem& sys, const Condition& cond) {
  return [&sys, cond](const Vec& x, double tau) {
    return VelocityPair{sys.marginal_velocity(x, tau, cond), sys.marginal_velocity(x, tau, kUnconditional)};
  };
}

}  // namespace

TEST_CASE("cfg combine") {
  CHECK(cfg_combine(v2(3, -1), v2(1, 1), 1.5) == v2(4, -2));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec vc = rng.normal_vec(4);
    const Vec vu = rng.normal_vec(4);
    const double w = 10.0 * rng.uniform();
    // w = 1 recovers v_c up to one rounding of the difference.
    const double scale = std::max(vc.cwiseAbs().maxCoeff(), vu.cwiseAbs().maxCoeff());
    CHECK((cfg_combine(vc, vu, 1.0) - vc).cwiseAbs().maxCoeff() <= 4 * std::numeric_limits<double>::epsilon() * scale);
    CHECK((cfg_combine(vc, vu, w) - ((1 - w) * vu + w * vc)).cwiseAbs().maxCoeff() <= 1e-12 * (1 + w));
  }
  CHECK_THROWS_AS(cfg_combine(v2(1, 1), Vec::Ones(3), 2.0), std::exception);
}

TEST_CASE("weight schedule boundaries and monotonicity") {
  for (const auto shape : {ScheduleShape::kLinear, ScheduleShape::kCosine}) {
    CHECK(weight_schedule(ctx_at(0, 50, 7.0), shape, 7.0) == doctest::Approx(1.0));
    CHECK(weight_schedule(ctx_at(49, 50, 7.0), shape, 7.0) == doctest::Approx(7.0));
    double prev = 0.0;
    for (int n = 0; n < 50; ++n) {
      const double w = weight_schedule(ctx_at(n, 50, 7.0), shape, 7.0);
      CHECK(w >= prev);
      prev = w;
    }
  }
  const double mid = weight_schedule(ctx_at(50, 101, 9.0), ScheduleShape::kCosine, 9.0);
  CHECK(std::abs(mid - 5.0) <= 1e-12);
  CHECK_THROWS_AS(weight_schedule(ctx_at(0, 10, 0.5), ScheduleShape::kLinear, 0.5), GuidanceError);
  CHECK(schedule_shape_from_string("cosine") == ScheduleShape::kCosine);
  CHECK_THROWS_AS(schedule_shape_from_string("step"), GuidanceError);
}

TEST_CASE("apg special cases") {
  const double w = 3.0;
  const double eta = 0.25;
  {
    const Vec vu = v2(-1, 0);
    const Vec vc = v2(1, 0);
    const ApgParts p = apg_decompose(vc, vu);
    CHECK(p.orthogonal.norm() == 0.0);
    CHECK(apg_combine(vc, vu, w, eta) == vu + w * eta * (vc - vu));
  }
  {
    const Vec vu = v2(1, -3);
    const Vec vc = v2(1, 0);
    CHECK(apg_decompose(vc, vu).parallel.norm() == 0.0);
    CHECK(apg_combine(vc, vu, w, eta) == vu + w * (vc - vu));
  }
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Vec vc = rng.normal_vec(3);
    const Vec vu = rng.normal_vec(3);
    const ApgParts p = apg_decompose(vc, vu);
    const Vec dv = vc - vu;
    CHECK((p.parallel + p.orthogonal - dv).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(p.orthogonal.dot(vc)) <= 1e-10 * dv.norm() * vc.norm());
    CHECK((apg_combine(vc, vu, 4.0, 1.0) - cfg_combine(vc, vu, 4.0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(apg_combine(Vec::Zero(2), v2(1, 1), 2.0, 0.0), GuidanceError);
  CHECK_THROWS_AS(apg_combine(v2(1, 0), v2(1, 1), 2.0, 1.5), GuidanceError);
}

TEST_CASE("cfg zero star") {
  const Vec vu = v2(0.5, -1.0);
  CHECK(cfg_zero_star_scale(2.0 * vu, vu) == doctest::Approx(2.0));
  CHECK((cfg_zero_star_combine(2.0 * vu, vu, 7.0) - 2.0 * vu).norm() < 1e-14);
  const Vec vc = v2(2.0, 1.0);  // orthogonal to vu
  CHECK(cfg_zero_star_scale(vc, vu) == 0.0);
  CHECK((cfg_zero_star_combine(vc, vu, 7.0) - 7.0 * vc).norm() < 1e-14);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec a = rng.normal_vec(5);
    const Vec b = rng.normal_vec(5);
    const Vec residual = a - cfg_zero_star_scale(a, b) * b;
    CHECK(std::abs(residual.dot(b)) <= 1e-10 * a.norm() * b.norm());
    CHECK(cfg_zero_star_combine_with_scale(a, b, 3.0, 1.0) == cfg_combine(a, b, 3.0));
  }
  CHECK_THROWS_AS(cfg_zero_star_combine(v2(1, 0), Vec::Zero(2), 2.0), GuidanceError);
}

TEST_CASE("rectified cfg++") {
  const FlowSystem sys = reference_system();
  const auto eval = evaluator_for(sys, "target");
  const Vec x = v2(0.4, -0.3);
  const StepContext ctx{10, 50, 0.2, 0.02, 5.0};
  const Vec vc = sys.marginal_velocity(x, 0.2, "target");
  CHECK(rectified_cfgpp_combine(eval, x, ctx, 0.0, 1.0) == vc);

  // Hand composition of predictor half step and midpoint error.
  const Vec x_mid = x + 0.01 * vc;
  const Vec e_mid = sys.marginal_velocity(x_mid, 0.21, "target") - sys.marginal_velocity(x_mid, 0.21, kUnconditional);
  const double alpha = 4.0 * std::pow(0.2, 1.5);
  const Vec expect = vc + alpha * e_mid;
  CHECK((rectified_cfgpp_combine(eval, x, ctx, 4.0, 1.5) - expect).norm() < 1e-14);

  const Mat id = Mat::Identity(2, 2);
  const FlowSystem full({GaussComponent{0.5, v2(3, 0), id}, GaussComponent{0.5, v2(-3, 0), id}}, {{"all", {0, 1}}});
  const auto eval_full = evaluator_for(full, "all");
  CHECK(rectified_cfgpp_combine(eval_full, x, ctx, 9.0, 1.0) == full.marginal_velocity(x, 0.2, "all"));

  const StepContext late{49, 50, 0.999, 0.004, 5.0};
  CHECK_THROWS_AS(rectified_cfgpp_combine(eval, x, late, 4.0, 1.0), GuidanceError);
  CHECK(rectified_gain(0.5, 4.0, 1.0) == 2.0);
}

TEST_CASE("smc first step by hand") {
  SlidingState st;
  st.lambda = 5.0;
  st.k = 0.1;
  const Vec vu = v2(0.0, 0.0);
  const Vec vc = v2(1.0, 0.0);
  const SmcOutput out = smc_step(vc, vu, StepContext{0, 10, 0.0, 0.1, 1.0}, st);
  CHECK(out.diagnostics.surface == v2(5.0, 0.0));
  CHECK(out.diagnostics.correction == v2(-0.1, 0.0));
  CHECK(out.v_hat == v2(0.9, 0.0));
  REQUIRE(out.state.e_prev);
  CHECK(*out.state.e_prev == vc);
}

TEST_CASE("smc with zero gain equals cfg") {
  Rng rng(4);
  SlidingState st;
  st.k = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec vc = rng.normal_vec(3);
    const Vec vu = rng.normal_vec(3);
    const SmcOutput out = smc_step(vc, vu, StepContext{i, 100, 0.01 * i, 0.01, 6.5}, st);
    CHECK(out.v_hat == cfg_combine(vc, vu, 6.5));
    st = out.state;
  }
}

TEST_CASE("geometric error sequences stay on the surface") {
  for (const double lambda : {0.5, 0.75, 1.5}) {
    SlidingState st;
    st.lambda = lambda;
    st.k = 0.3;
    Vec e = v2(1.0, -2.0);
    for (int n = 0; n < 12; ++n) {
      const SmcOutput out = smc_step(e, Vec::Zero(2), StepContext{n, 12, n / 12.0, 1.0 / 12, 2.0}, st);
      if (n > 0) {
        CHECK(out.diagnostics.surface.norm() == 0.0);
        CHECK(out.diagnostics.correction.norm() == 0.0);
      }
      st = out.state;
      e = (1.0 - lambda) * e;
    }
  }
}

TEST_CASE("switching bound and boundary layer") {
  Rng rng(5);
  SlidingState st;
  st.k = 0.7;
  SlidingState soft = st;
  soft.boundary_layer = 0.5;
  for (int i = 0; i < 200; ++i) {
    const Vec vc = rng.normal_vec(4);
    const Vec vu = rng.normal_vec(4);
    const StepContext ctx{i, 200, i / 200.0, 0.005, 3.0};
    const SmcOutput hard = smc_step(vc, vu, ctx, st);
    const SmcOutput sat = smc_step(vc, vu, ctx, soft);
    CHECK(hard.diagnostics.correction.cwiseAbs().maxCoeff() <= 0.7);
    CHECK(sat.diagnostics.correction.cwiseAbs().maxCoeff() <= 0.7);
    st = hard.state;
    soft = sat.state;
  }
}

TEST_CASE("control law dispatch") {
  const FlowSystem sys = reference_system();
  const auto eval = evaluator_for(sys, "target");
  const Vec x = v2(0.2, 0.1);
  const StepContext ctx{3, 20, 0.15, 0.05, 4.0};
  const Vec vc = sys.marginal_velocity(x, ctx.tau, "target");
  const Vec vu = sys.marginal_velocity(x, ctx.tau, kUnconditional);

  ControlLaw cfg(CfgParams{4.0});
  CHECK(cfg.apply(vc, vu, x, ctx, eval) == cfg_combine(vc, vu, 4.0));
  CHECK(!cfg.last_surface());

  ControlLaw sched(WeightScheduleParams{4.0, ScheduleShape::kLinear});
  const StepContext last{19, 20, 0.95, 0.05, 4.0};
  CHECK(sched.apply(vc, vu, x, last, eval) == cfg_combine(vc, vu, 4.0));

  ControlLaw apg(ApgParams{4.0, 0.0});
  CHECK(apg.apply(vc, vu, x, ctx, eval) == apg_combine(vc, vu, 4.0, 0.0));

  ControlLaw zero(CfgZeroStarParams{4.0});
  CHECK(zero.apply(vc, vu, x, ctx, eval) == cfg_zero_star_combine(vc, vu, 4.0));

  ControlLaw rect(RectifiedCfgppParams{4.0, std::nullopt, 1.0});
  CHECK(rect.apply(vc, vu, x, ctx, eval) == rectified_cfgpp_combine(eval, x, ctx, 3.0, 1.0));

  ControlLaw smc(SmcParams{4.0, 6.0, 0.1, 0.0});
  const Vec first = smc.apply(vc, vu, x, ctx, eval);
  CHECK(first == smc_step(vc, vu, ctx, SlidingState{6.0, 0.1, 0.0, std::nullopt, std::nullopt}).v_hat);
  CHECK(smc.last_surface());
  smc.reset();
  CHECK(!smc.last_surface());
  CHECK(smc.apply(vc, vu, x, ctx, eval) == first);
}

TEST_CASE("parameter validation names the field") {
  CHECK_THROWS_WITH_AS(validate(SmcParams{5.0, -1.0, 0.1, 0.0}), doctest::Contains("lambda"), GuidanceError);
  CHECK_THROWS_WITH_AS(validate(SmcParams{5.0, 6.0, -0.1, 0.0}), doctest::Contains("k"), GuidanceError);
  CHECK_THROWS_WITH_AS(validate(WeightScheduleParams{0.5, ScheduleShape::kLinear}), doctest::Contains("w_max"),
                       GuidanceError);
  CHECK_THROWS_WITH_AS(validate(ApgParams{5.0, 2.0}), doctest::Contains("eta"), GuidanceError);
  CHECK_THROWS_WITH_AS(control_kind_from_string("pid"), doctest::Contains("pid"), GuidanceError);
  for (const auto kind : {ControlKind::kCfg, ControlKind::kWeightSchedule, ControlKind::kApg, ControlKind::kCfgZeroStar,
                          ControlKind::kRectifiedCfgpp, ControlKind::kSmc}) {
    CHECK(control_kind_from_string(to_string(kind)) == kind);
  }
  CHECK(SmcParams{}.lambda == 6.0);
  CHECK(SmcParams{}.k == 0.1);
}
