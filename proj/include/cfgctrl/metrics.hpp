// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cfgctrl/flow_systems.hpp"
#include "cfgctrl/sampler.hpp"

namespace cfgctrl {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaussFit {
  Vec mean;
  Mat cov;
  std::size_t count = 0;
};

/// Sample mean and (unbiased, symmetrized) covariance. Needs ≥ d + 1 samples.
GaussFit fit_gaussian(std::span<const Vec> samples);

/// Closed-form 2-Wasserstein distance between two Gaussians.
double w2_gaussian(const Vec& mean1, const Mat& cov1, const Vec& mean2, const Mat& cov2);

/// E‖z‖ for z ∼ N(0, I_d), the chi mean √2·Γ((d+1)/2)/Γ(d/2).
double chi_mean(int dim);

/// Target of a condition as a single Gaussian: the component itself for a
/// one-component subset, otherwise the moment-matched mixture.
std::pair<Vec, Mat> target_gaussian(const FlowSystem& sys, const Condition& cond);

struct QualityReport {
  double w2 = 0.0;
  double alignment = 0.0;
  double oversaturation = 0.0;
  std::optional<double> e_decay_ratio;
  std::size_t n_divergent = 0;
  std::size_t n_samples = 0;
};

/// Per-sample alignment: data-space responsibility mass of the condition's
/// components under the full mixture.
double sample_alignment(const FlowSystem& sys, const Condition& cond, const Vec& x);

/// Per-sample Mahalanobis distance to the most responsible target component,
/// minus the chi mean for the dimension.
double sample_oversaturation(const FlowSystem& sys, const Condition& cond, const Vec& x);

QualityReport quality_report(const RunResult& result, const FlowSystem& sys, const Condition& cond);

struct PhasePoint {
  double e_norm = 0.0;
  double rate = 0.0;
};

/// (‖e‖_n, (‖e‖_{n+1} − ‖e‖_n)/(τ_{n+1} − τ_n)) for n = 0 … S−2.
std::vector<PhasePoint> phase_plane(const Trace& trace);

/// Mean |rate + λ·‖e‖| over the points, the distance to the line ė = −λe.
double sliding_line_residual(std::span<const PhasePoint> points, double lambda);

struct LyapunovAudit {
  int violations = 0;
  std::optional<int> first_violation_step;
};

/// Counts steps n where V_{n+1} > V_n while ‖s_n‖ > band.
LyapunovAudit lyapunov_audit(std::span<const double> s_norms, double band);

/// Throws MetricsError when the trace carries no sliding variable.
LyapunovAudit lyapunov_audit(const Trace& trace, double band);

}  // namespace cfgctrl
