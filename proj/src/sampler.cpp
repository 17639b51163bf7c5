// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace cfgctrl {

std::string_view to_string(Scheme scheme) { return scheme == Scheme::kEuler ? "euler" : "heun"; }

Scheme scheme_from_string(std::string_view name) {
  if (name == "euler") return Scheme::kEuler;
  if (name == "heun") return Scheme::kHeun;
  throw std::invalid_argument("unknown integration scheme '" + std::string(name) + "'");
}

void IntegratorSpec::validate() const {
  if (steps < 2) throw std::invalid_argument("integrator needs at least 2 steps");
  if (!(tau_clamp >= 0.0 && tau_clamp < 0.5)) throw std::invalid_argument("tau clamp must lie in [0, 0.5)");
}

DivergenceError::DivergenceError(int step, const std::string& what)
    : std::runtime_error("trajectory diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

namespace {

void check_state(const Vec& x, int step, const char* what) {
  if (!x.allFinite()) throw DivergenceError(step, std::string("non-finite ") + what);
  if (x.norm() > kDivergenceRadius) throw DivergenceError(step, std::string(what) + " norm exceeds 1e6");
}

}  // namespace

Trace sample_trajectory(const FlowSystem& sys, ControlLaw& law, const IntegratorSpec& integ, const Condition& cond,
                        Rng& rng, bool record_x) {
  integ.validate();
  law.reset();
  const VelocityEvaluator eval = [&](const Vec& x, double tau) {
    return VelocityPair{sys.marginal_velocity(x, tau, cond), sys.marginal_velocity(x, tau, kUnconditional)};
  };
  const double dtau = integ.step_size();

  Trace trace;
  trace.records.reserve(static_cast<std::size_t>(integ.steps));
  Vec x = rng.normal_vec(sys.dim());
  trace.x_initial = x;

  for (int n = 0; n < integ.steps; ++n) {
    const double tau = integ.tau_at(n);
    const StepContext ctx{n, integ.steps, tau, dtau, law.scale()};
    const VelocityPair here = eval(x, tau);
    const Vec e = here.cond - here.uncond;
    const Vec v_hat = law.apply(here.cond, here.uncond, x, ctx, eval);
    check_state(v_hat, n, "guided velocity");

    TraceRecord rec;
    rec.step = n;
    rec.tau = tau;
    rec.e_norm = e.norm();
    if (const auto& s = law.last_surface()) {
      rec.s_norm = s->norm();
      rec.lyapunov = 0.5 * s->squaredNorm();
    }
    rec.vhat_norm = v_hat.norm();
    if (record_x) rec.x = x;
    trace.records.push_back(std::move(rec));

    if (integ.scheme == Scheme::kEuler) {
      x = x + dtau * v_hat;
    } else {
      // Corrector slope from a copy so controller state advances once per step.
      const Vec x_pred = x + dtau * v_hat;
      check_state(x_pred, n, "predictor state");
      const double tau_next = tau + dtau;
      ControlLaw probe = law;
      // Look-ahead controllers must stay below τ = 1 from the grid end.
      const StepContext next_ctx{std::min(n + 1, integ.steps - 1), integ.steps, tau_next,
                                 std::min(dtau, 1.0 - tau_next), law.scale()};
      const VelocityPair there = eval(x_pred, tau_next);
      const Vec v_next = probe.apply(there.cond, there.uncond, x_pred, next_ctx, eval);
      check_state(v_next, n, "corrector velocity");
      x = x + (0.5 * dtau) * (v_hat + v_next);
    }
    check_state(x, n, "state");
  }
  trace.x_final = x;
  return trace;
}

std::size_t RunResult::divergent_count() const {
  std::size_t n = 0;
  for (const auto& o : outcomes) n += o.diverged() ? 1 : 0;
  return n;
}

std::vector<Vec> RunResult::final_samples() const {
  std::vector<Vec> out;
  for (const auto& o : outcomes) {
    if (o.trace) out.push_back(o.trace->x_final);
  }
  return out;
}

std::vector<const Trace*> RunResult::traces() const {
  std::vector<const Trace*> out;
  for (const auto& o : outcomes) {
    if (o.trace) out.push_back(&*o.trace);
  }
  return out;
}

int default_thread_count() {
  if (const char* env = std::getenv("CFGCTRL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunResult run_batch(const FlowSystem& sys, const BatchSpec& spec) {
  if (spec.trajectories < 1) throw std::invalid_argument("batch needs at least one trajectory");
  spec.integrator.validate();
  const ControlLaw prototype(spec.controller);

  RunResult result;
  result.fingerprint = spec.fingerprint;
  result.outcomes.resize(static_cast<std::size_t>(spec.trajectories));

  const auto run_one = [&](std::size_t i) {
    ControlLaw law = prototype;
    Rng rng(spec.seed, i);
    TrajectoryOutcome& out = result.outcomes[i];
    try {
      out.trace = sample_trajectory(sys, law, spec.integrator, spec.condition, rng, spec.record_x);
    } catch (const DivergenceError& e) {
      out.divergence_step = e.step();
      out.failure = e.what();
    }
  };

  const int threads = std::min(spec.threads > 0 ? spec.threads : default_thread_count(), spec.trajectories);
  if (threads <= 1) {
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) run_one(i);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < result.outcomes.size(); i = next++) {
        try {
          run_one(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

}  // namespace cfgctrl
