// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/control_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cfgctrl {

std::string_view to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::kConstant:
      return "constant";
    case DriftKind::kSinusoidal:
      return "sinusoidal";
    case DriftKind::kNoise:
      return "noise";
  }
  return "unknown";
}

std::string_view to_string(GainDeviationKind kind) {
  switch (kind) {
    case GainDeviationKind::kZero:
      return "zero";
    case GainDeviationKind::kRotation:
      return "rotation";
    case GainDeviationKind::kSeeded:
      return "seeded";
  }
  return "unknown";
}

DriftKind drift_kind_from_string(std::string_view name) {
  for (const auto k : {DriftKind::kConstant, DriftKind::kSinusoidal, DriftKind::kNoise}) {
    if (to_string(k) == name) return k;
  }
  throw ControlLabError("unknown drift kind '" + std::string(name) + "'");
}

GainDeviationKind gain_deviation_kind_from_string(std::string_view name) {
  for (const auto k : {GainDeviationKind::kZero, GainDeviationKind::kRotation, GainDeviationKind::kSeeded}) {
    if (to_string(k) == name) return k;
  }
  throw ControlLabError("unknown gain deviation kind '" + std::string(name) + "'");
}

void PerturbedDynamics::validate() const {
  if (dim < 1) throw ControlLabError("dimension must be >= 1");
  if (!(w > 0.0)) throw ControlLabError("w must be positive");
  if (!(delta >= 0.0)) throw ControlLabError("delta must be >= 0");
  if (!(rho >= 0.0)) throw ControlLabError("rho must be >= 0");
  if (!(k >= 0.0)) throw ControlLabError("k must be >= 0");
  if (!(dt > 0.0)) throw ControlLabError("dt must be positive");
  if (s0.size() != dim || !s0.allFinite()) throw ControlLabError("s0 must be a finite vector of length dim");
}

double PerturbedDynamics::dominance_margin() const { return w - rho * std::sqrt(static_cast<double>(dim)); }

bool PerturbedDynamics::gain_condition_met() const {
  const double phi = dominance_margin();
  return phi > 0.0 && k * phi > delta;
}

double discrete_band(double dt, double w, double k) { return 1.5 * dt * w * k; }

namespace {

Vec random_unit(Rng& rng, int dim) {
  Vec v = rng.normal_vec(dim);
  const double n = v.norm();
  if (n == 0.0) {
    v = Vec::Zero(dim);
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

Mat random_orthogonal(Rng& rng, int dim) {
  Mat g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  // Fix column signs so the draw is unique given g.
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

class Disturbance {
 public:
  explicit Disturbance(const PerturbedDynamics& dyn)
      : dyn_(dyn), rng_(dyn.seed, 0x5eed), drift_dir_(random_unit(rng_, dyn.dim)) {
    phases_ = Vec(dyn.dim);
    for (int i = 0; i < dyn.dim; ++i) phases_[i] = 2.0 * std::numbers::pi * rng_.uniform();
    deviation_ = draw_deviation();
  }

  Vec drift(double t) {
    switch (dyn_.drift) {
      case DriftKind::kConstant:
        return dyn_.delta * drift_dir_;
      case DriftKind::kSinusoidal: {
        Vec out(dyn_.dim);
        const double amp = dyn_.delta / std::sqrt(static_cast<double>(dyn_.dim));
        for (int i = 0; i < dyn_.dim; ++i) out[i] = amp * std::sin(dyn_.drift_frequency * t + phases_[i]);
        return out;
      }
      case DriftKind::kNoise:
        return (dyn_.delta * rng_.uniform()) * random_unit(rng_, dyn_.dim);
    }
    return Vec::Zero(dyn_.dim);
  }

  const Mat& deviation(bool first_step) {
    if (dyn_.per_step_deviation && !first_step) deviation_ = draw_deviation();
    return deviation_;
  }

  double deviation_norm() const { return deviation_norm_; }

 private:
  Mat draw_deviation() {
    const int d = dyn_.dim;
    Mat m = Mat::Zero(d, d);
    switch (dyn_.deviation) {
      case GainDeviationKind::kZero:
        break;
      case GainDeviationKind::kRotation:
        m = dyn_.rho * random_orthogonal(rng_, d);
        break;
      case GainDeviationKind::kSeeded: {
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) m(i, j) = rng_.normal();
        }
        const double norm = spectral_norm(m);
        if (norm > 0.0) m *= dyn_.rho * rng_.uniform_open_low() / norm;
        break;
      }
    }
    deviation_norm_ = spectral_norm(m);
    if (deviation_norm_ > dyn_.rho * (1.0 + 1e-8) + 1e-300) {
      throw ControlLabError("realized gain deviation exceeds rho");
    }
    return m;
  }

  const PerturbedDynamics& dyn_;
  Rng rng_;
  Vec drift_dir_;
  Vec phases_;
  Mat deviation_;
  double deviation_norm_ = 0.0;
};

}  // namespace

ConvergenceReport simulate_sliding(const PerturbedDynamics& dyn, int steps) {
  dyn.validate();
  if (steps < 1) throw ControlLabError("steps must be >= 1");

  ConvergenceReport report;
  report.gain_condition_met = dyn.gain_condition_met();
  report.band = discrete_band(dyn.dt, dyn.w, dyn.k);
  const double phi = dyn.dominance_margin();
  if (report.gain_condition_met) {
    const double epsilon = dyn.k - dyn.delta / phi;
    report.eta = epsilon * phi;
    report.eta_main = dyn.k * phi - dyn.delta;
    report.bound_steps = dyn.s0.norm() / *report.eta / dyn.dt;
  }

  Disturbance dist(dyn);
  Vec s = dyn.s0;
  report.s_norm.reserve(static_cast<std::size_t>(steps) + 1);
  report.lyapunov.reserve(static_cast<std::size_t>(steps) + 1);
  const auto record = [&](int n) {
    const double norm = s.norm();
    report.s_norm.push_back(norm);
    report.lyapunov.push_back(0.5 * norm * norm);
    if (!report.reached && norm <= report.band) {
      report.reached = true;
      report.reach_step = n;
    } else if (report.reached) {
      const auto m = report.lyapunov.size();
      report.max_v_increase_after_reach =
          std::max(report.max_v_increase_after_reach, report.lyapunov[m - 1] - report.lyapunov[m - 2]);
    }
  };
  record(0);

  const Mat nominal = dyn.w * Mat::Identity(dyn.dim, dyn.dim);
  for (int n = 0; n < steps; ++n) {
    const double t = n * dyn.dt;
    const Vec phi_t = dist.drift(t);
    const double drift_norm = phi_t.norm();
    if (drift_norm > dyn.delta * (1.0 + 1e-12) + 1e-300) throw ControlLabError("realized drift exceeds delta");
    report.max_drift_norm = std::max(report.max_drift_norm, drift_norm);
    const Mat& dev = dist.deviation(n == 0);
    report.max_deviation_norm = std::max(report.max_deviation_norm, dist.deviation_norm());
    const Vec correction = -dyn.k * sign_elementwise(s);
    s = s + dyn.dt * (phi_t + (nominal + dev) * correction);
    if (!s.allFinite()) throw ControlLabError("sliding variable became non-finite at step " + std::to_string(n));
    record(n + 1);
  }
  return report;
}

Corridor stability_corridor(double delta_est, double w, double s_norm, double dt) {
  if (!(delta_est >= 0.0)) throw ControlLabError("stability_corridor: delta must be >= 0");
  if (!(w > 0.0) || !(s_norm > 0.0) || !(dt > 0.0)) {
    throw ControlLabError("stability_corridor: w, |s| and dt must be positive");
  }
  return Corridor{delta_est / w, 2.0 * s_norm / (w * dt)};
}

std::vector<CorridorRow> corridor_sweep(const PerturbedDynamics& tmpl, const std::vector<double>& k_values,
                                        int steps) {
  std::vector<CorridorRow> rows;
  rows.reserve(k_values.size());
  for (const double k : k_values) {
    PerturbedDynamics dyn = tmpl;
    dyn.k = k;
    const ConvergenceReport rep = simulate_sliding(dyn, steps);
    CorridorRow row;
    row.k = k;
    row.reached = rep.reached;
    row.reach_step = rep.reach_step;
    if (rep.reach_step) {
      const auto begin = rep.s_norm.begin() + *rep.reach_step;
      row.residual_band = *std::max_element(begin, rep.s_norm.end());
    }
    const auto tail = rep.s_norm.begin() + static_cast<std::ptrdiff_t>(rep.s_norm.size() / 2);
    row.osc_amplitude = *std::max_element(tail, rep.s_norm.end());
    rows.push_back(row);
  }
  return rows;
}

double estimate_drift(const std::vector<Vec>& surfaces, double dtau, double w, double k) {
  if (!(dtau > 0.0)) throw ControlLabError("estimate_drift: step size must be positive");
  double best = 0.0;
  for (std::size_t n = 0; n + 1 < surfaces.size(); ++n) {
    const Vec rate = (surfaces[n + 1] - surfaces[n]) / dtau + (w * k) * sign_elementwise(surfaces[n]);
    best = std::max(best, rate.norm());
  }
  return best;
}

}  // namespace cfgctrl
