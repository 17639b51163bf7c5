// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/flow_systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace cfgctrl {

namespace {

struct ComponentTerms {
  double log_density = 0.0;
  Vec velocity;
};

// Gaussian conditioning of (x₀, x₁) on x_τ for one component N(μ, Σ):
// x_τ ∼ N(τμ, τ²Σ + (1−τ)²I), Cov(x₁, x_τ) = τΣ, Cov(x₀, x_τ) = (1−τ)I.
ComponentTerms component_terms(const GaussComponent& c, const Vec& x, double tau, bool want_velocity) {
  const Eigen::Index d = x.size();
  const double a = 1.0 - tau;
  const Mat marginal_cov = tau * tau * c.cov + a * a * Mat::Identity(d, d);
  const CholeskyFactor factor(marginal_cov);
  const Vec dev = x - tau * c.mean;
  const Vec y = factor.solve(dev);
  ComponentTerms out;
  out.log_density =
      -0.5 * dev.dot(y) - 0.5 * factor.log_det() - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  if (want_velocity) {
    const Vec mean_data = c.mean + tau * (c.cov * y);
    const Vec mean_noise = a * y;
    out.velocity = mean_data - mean_noise;
  }
  return out;
}

std::size_t pick_component(Rng& rng, const std::vector<std::size_t>& support, const std::vector<double>& cumulative) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                     static_cast<std::ptrdiff_t>(support.size()) - 1));
  return support[idx];
}

}  // namespace

FlowSystem::FlowSystem(std::vector<GaussComponent> components,
                       std::map<std::string, std::vector<std::size_t>> conditions)
    : components_(std::move(components)), conditions_(std::move(conditions)) {
  if (components_.empty()) throw FlowSystemError("flow system needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ <= 0) throw FlowSystemError("component dimension must be positive");
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    if (!(c.weight > 0.0 && c.weight <= 1.0)) {
      throw FlowSystemError("component " + std::to_string(k) + ": weight must lie in (0, 1]");
    }
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_) {
      throw FlowSystemError("component " + std::to_string(k) + ": dimension inconsistent with component 0");
    }
    if (!c.mean.allFinite()) throw FlowSystemError("component " + std::to_string(k) + ": non-finite mean");
    try {
      prepared_.push_back(Prepared{CholeskyFactor(c.cov)});
    } catch (const NumericsError& e) {
      throw FlowSystemError("component " + std::to_string(k) + ": covariance not SPD (" + e.what() + ")");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw FlowSystemError("component weights must sum to 1");
  for (const auto& [id, subset] : conditions_) {
    if (subset.empty()) throw FlowSystemError("condition '" + id + "' maps to an empty component subset");
    for (const auto k : subset) {
      if (k >= components_.size()) {
        throw FlowSystemError("condition '" + id + "' references missing component " + std::to_string(k));
      }
    }
  }
}

std::vector<std::size_t> FlowSystem::support(const Condition& cond) const {
  if (!cond) {
    std::vector<std::size_t> all(components_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  const auto it = conditions_.find(*cond);
  if (it == conditions_.end()) throw FlowSystemError("unknown condition '" + *cond + "'");
  if (it->second.empty()) throw FlowSystemError("condition '" + *cond + "' maps to an empty component subset");
  return it->second;
}

void FlowSystem::check_tau(double tau, bool allow_one) const {
  if (!std::isfinite(tau) || tau < 0.0 || tau > 1.0 || (!allow_one && tau >= 1.0)) {
    throw FlowSystemError("time " + std::to_string(tau) + (allow_one ? " outside [0, 1]" : " outside [0, 1)"));
  }
}

Posterior FlowSystem::posterior(const Vec& x, double tau, const Condition& cond) const {
  check_tau(tau, true);
  if (x.size() != dim_) throw FlowSystemError("posterior: dimension mismatch");
  Posterior post;
  post.components = support(cond);
  std::vector<double> logs;
  logs.reserve(post.components.size());
  for (const auto k : post.components) {
    logs.push_back(std::log(components_[k].weight) + component_terms(components_[k], x, tau, false).log_density);
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  double norm = 0.0;
  for (auto& l : logs) {
    l = std::exp(l - top);
    norm += l;
  }
  for (auto& l : logs) l /= norm;
  post.responsibilities = std::move(logs);
  return post;
}

Vec FlowSystem::marginal_velocity(const Vec& x, double tau, const Condition& cond) const {
  check_tau(tau, false);
  if (x.size() != dim_) throw FlowSystemError("marginal_velocity: dimension mismatch");
  if (!x.allFinite()) throw FlowSystemError("marginal_velocity: non-finite state");
  const auto subset = support(cond);
  std::vector<ComponentTerms> terms;
  std::vector<double> logs;
  terms.reserve(subset.size());
  for (const auto k : subset) {
    terms.push_back(component_terms(components_[k], x, tau, true));
    logs.push_back(std::log(components_[k].weight) + terms.back().log_density);
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  double norm = 0.0;
  for (auto& l : logs) {
    l = std::exp(l - top);
    norm += l;
  }
  Vec v = Vec::Zero(dim_);
  for (std::size_t i = 0; i < subset.size(); ++i) v += (logs[i] / norm) * terms[i].velocity;
  return v;
}

Vec FlowSystem::error_signal(const Vec& x, double tau, const Condition& cond) const {
  return marginal_velocity(x, tau, cond) - marginal_velocity(x, tau, kUnconditional);
}

std::pair<Vec, Vec> FlowSystem::sample_pair(Rng& rng, const Condition& cond) const {
  const auto subset = support(cond);
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto k : subset) cumulative.push_back(acc += components_[k].weight);
  const std::size_t k = pick_component(rng, subset, cumulative);
  Vec x1 = gaussian_sample(rng, components_[k].mean, prepared_[k].cov);
  Vec x0 = rng.normal_vec(dim_);
  return {std::move(x0), std::move(x1)};
}

Vec FlowSystem::sample_data(Rng& rng, const Condition& cond) const { return sample_pair(rng, cond).second; }

double default_oracle_bandwidth(double tau) { return 0.1 * std::sqrt(tau * tau + (1.0 - tau) * (1.0 - tau)); }

OracleEstimate mc_velocity_oracle(const FlowSystem& sys, const Vec& x, double tau, const Condition& cond,
                                  std::size_t n_pairs, double bandwidth, Rng& rng) {
  if (n_pairs < 10000) throw FlowSystemError("velocity oracle needs at least 1e4 pairs");
  if (!(bandwidth > 0.0)) throw FlowSystemError("velocity oracle bandwidth must be positive");
  if (!(tau >= 0.0 && tau <= 1.0)) throw FlowSystemError("velocity oracle time outside [0, 1]");
  const Eigen::Index d = sys.dim();
  if (x.size() != d) throw FlowSystemError("velocity oracle: dimension mismatch");

  const auto subset = sys.support(cond);
  std::vector<double> cumulative;
  std::vector<Mat> lowers;
  double acc = 0.0;
  for (const auto k : subset) {
    cumulative.push_back(acc += sys.component(k).weight);
    lowers.push_back(CholeskyFactor(sys.component(k).cov).lower());
  }
  std::vector<std::size_t> slot(sys.num_components(), 0);
  for (std::size_t i = 0; i < subset.size(); ++i) slot[subset[i]] = i;

  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  Vec sum_wy = Vec::Zero(d);
  Vec sum_w2y = Vec::Zero(d);
  Vec sum_w2yy = Vec::Zero(d);
  Vec z(d);
  Vec x0(d);
  Vec x1(d);
  for (std::size_t n = 0; n < n_pairs; ++n) {
    const std::size_t k = pick_component(rng, subset, cumulative);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    for (Eigen::Index i = 0; i < d; ++i) x0[i] = rng.normal();
    x1.noalias() = sys.component(k).mean + lowers[slot[k]] * z;
    const double r2 = (tau * x1 + (1.0 - tau) * x0 - x).squaredNorm();
    const double w = std::exp(-r2 * inv_two_h2);
    if (w == 0.0) continue;
    const Vec y = x1 - x0;
    sum_w += w;
    sum_w2 += w * w;
    sum_wy += w * y;
    sum_w2y += (w * w) * y;
    sum_w2yy += (w * w) * y.cwiseProduct(y);
  }

  OracleEstimate out;
  out.effective_sample_size = sum_w > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
  if (out.effective_sample_size < 100.0) {
    throw FlowSystemError("velocity oracle effective sample size " + std::to_string(out.effective_sample_size) +
                          " < 100; increase bandwidth or n_pairs");
  }
  out.estimate = sum_wy / sum_w;
  const Vec& m = out.estimate;
  const Vec resid2 = sum_w2yy - 2.0 * m.cwiseProduct(sum_w2y) + sum_w2 * m.cwiseProduct(m);
  out.standard_error = (resid2.cwiseMax(0.0) / (sum_w * sum_w)).cwiseSqrt();
  return out;
}

FlowSystem reference_system() {
  GaussComponent right{0.5, Vec::Zero(2), Mat::Identity(2, 2)};
  right.mean << 3.0, 0.0;
  GaussComponent left{0.5, Vec::Zero(2), Mat::Identity(2, 2)};
  left.mean << -3.0, 0.0;
  return FlowSystem({right, left}, {{"target", {0}}, {"other", {1}}});
}

}  // namespace cfgctrl
