// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cfgctrl {

GaussFit fit_gaussian(std::span<const Vec> samples) {
  if (samples.empty()) throw MetricsError("fit_gaussian: no samples");
  const Eigen::Index d = samples.front().size();
  if (samples.size() < static_cast<std::size_t>(d) + 1) {
    throw MetricsError("fit_gaussian: need at least d + 1 samples");
  }
  GaussFit fit;
  fit.count = samples.size();
  fit.mean = Vec::Zero(d);
  for (const auto& x : samples) {
    if (x.size() != d) throw MetricsError("fit_gaussian: inconsistent sample dimension");
    fit.mean += x;
  }
  fit.mean /= static_cast<double>(fit.count);
  fit.cov = Mat::Zero(d, d);
  for (const auto& x : samples) {
    const Vec c = x - fit.mean;
    fit.cov += c * c.transpose();
  }
  fit.cov /= static_cast<double>(fit.count - 1);
  fit.cov = 0.5 * (fit.cov + fit.cov.transpose());
  return fit;
}

double w2_gaussian(const Vec& mean1, const Mat& cov1, const Vec& mean2, const Mat& cov2) {
  if (mean1.size() != mean2.size()) throw MetricsError("w2_gaussian: dimension mismatch");
  try {
    CholeskyFactor check1(cov1);
    CholeskyFactor check2(cov2);
  } catch (const NumericsError& e) {
    throw MetricsError(std::string("w2_gaussian: covariance not SPD (") + e.what() + ")");
  }
  const Mat root2 = sqrtm_psd(cov2);
  const Mat cross = sqrtm_psd(root2 * cov1 * root2);
  const double trace_term = (cov1 + cov2 - 2.0 * cross).trace();
  const double d2 = (mean1 - mean2).squaredNorm() + std::max(trace_term, 0.0);
  return std::sqrt(d2);
}

double chi_mean(int dim) {
  if (dim < 1) throw MetricsError("chi_mean: dimension must be >= 1");
  const double d = static_cast<double>(dim);
  return std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d));
}

std::pair<Vec, Mat> target_gaussian(const FlowSystem& sys, const Condition& cond) {
  const auto subset = sys.support(cond);
  if (subset.size() == 1) return {sys.component(subset[0]).mean, sys.component(subset[0]).cov};
  double total = 0.0;
  Vec mean = Vec::Zero(sys.dim());
  for (const auto k : subset) {
    total += sys.component(k).weight;
    mean += sys.component(k).weight * sys.component(k).mean;
  }
  mean /= total;
  Mat cov = Mat::Zero(sys.dim(), sys.dim());
  for (const auto k : subset) {
    const auto& c = sys.component(k);
    const Vec dm = c.mean - mean;
    cov += (c.weight / total) * (c.cov + dm * dm.transpose());
  }
  return {mean, cov};
}

double sample_alignment(const FlowSystem& sys, const Condition& cond, const Vec& x) {
  const auto target = sys.support(cond);
  const Posterior post = sys.posterior(x, 1.0, kUnconditional);
  double mass = 0.0;
  for (std::size_t i = 0; i < post.components.size(); ++i) {
    if (std::find(target.begin(), target.end(), post.components[i]) != target.end()) mass += post.responsibilities[i];
  }
  return std::clamp(mass, 0.0, 1.0);
}

double sample_oversaturation(const FlowSystem& sys, const Condition& cond, const Vec& x) {
  const Posterior post = sys.posterior(x, 1.0, cond);
  std::size_t best = 0;
  for (std::size_t i = 1; i < post.components.size(); ++i) {
    if (post.responsibilities[i] > post.responsibilities[best]) best = i;
  }
  const auto& c = sys.component(post.components[best]);
  const Vec dev = x - c.mean;
  const double maha = std::sqrt(std::max(dev.dot(cholesky_solve(c.cov, dev)), 0.0));
  return maha - chi_mean(static_cast<int>(sys.dim()));
}

QualityReport quality_report(const RunResult& result, const FlowSystem& sys, const Condition& cond) {
  const std::vector<Vec> finals = result.final_samples();
  if (finals.size() < static_cast<std::size_t>(sys.dim()) + 1) {
    throw MetricsError("quality_report: need at least d + 1 non-divergent samples, got " +
                       std::to_string(finals.size()));
  }
  QualityReport report;
  report.n_samples = finals.size();
  report.n_divergent = result.divergent_count();

  const GaussFit fit = fit_gaussian(finals);
  const auto [target_mean, target_cov] = target_gaussian(sys, cond);
  report.w2 = w2_gaussian(fit.mean, fit.cov, target_mean, target_cov);

  double align = 0.0;
  double over = 0.0;
  for (const auto& x : finals) {
    align += sample_alignment(sys, cond, x);
    over += sample_oversaturation(sys, cond, x);
  }
  report.alignment = std::clamp(align / static_cast<double>(finals.size()), 0.0, 1.0);
  report.oversaturation = over / static_cast<double>(finals.size());

  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;
  for (const Trace* t : result.traces()) {
    if (t->records.empty()) continue;
    const double first = t->records.front().e_norm;
    if (first > 0.0) {
      ratio_sum += t->records.back().e_norm / first;
      ++ratio_count;
    }
  }
  if (ratio_count > 0) report.e_decay_ratio = ratio_sum / static_cast<double>(ratio_count);
  return report;
}

std::vector<PhasePoint> phase_plane(const Trace& trace) {
  std::vector<PhasePoint> points;
  const auto& r = trace.records;
  if (r.size() < 2) return points;
  points.reserve(r.size() - 1);
  for (std::size_t n = 0; n + 1 < r.size(); ++n) {
    const double dtau = r[n + 1].tau - r[n].tau;
    points.push_back({r[n].e_norm, (r[n + 1].e_norm - r[n].e_norm) / dtau});
  }
  return points;
}

double sliding_line_residual(std::span<const PhasePoint> points, double lambda) {
  if (points.empty()) throw MetricsError("sliding_line_residual: no points");
  double acc = 0.0;
  for (const auto& p : points) acc += std::abs(p.rate + lambda * p.e_norm);
  return acc / static_cast<double>(points.size());
}

LyapunovAudit lyapunov_audit(std::span<const double> s_norms, double band) {
  LyapunovAudit audit;
  for (std::size_t n = 0; n + 1 < s_norms.size(); ++n) {
    const double v_now = 0.5 * s_norms[n] * s_norms[n];
    const double v_next = 0.5 * s_norms[n + 1] * s_norms[n + 1];
    if (s_norms[n] > band && v_next > v_now) {
      ++audit.violations;
      if (!audit.first_violation_step) audit.first_violation_step = static_cast<int>(n);
    }
  }
  return audit;
}

LyapunovAudit lyapunov_audit(const Trace& trace, double band) {
  std::vector<double> s;
  s.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    if (!r.s_norm) throw MetricsError("lyapunov_audit: trace has no sliding variable records");
    s.push_back(*r.s_norm);
  }
  return lyapunov_audit(s, band);
}

}  // namespace cfgctrl
