// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfgctrl/numerics.hpp"

namespace cfgctrl {

class FlowSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaussComponent {
  double weight = 1.0;
  Vec mean;
  Mat cov;
};

/// Condition id; std::nullopt selects the unconditional field (all components).
using Condition = std::optional<std::string>;

inline const Condition kUnconditional = std::nullopt;

/// Responsibilities over the components selected by a condition.
struct Posterior {
  std::vector<std::size_t> components;
  std::vector<double> responsibilities;
};

/// Gaussian-mixture data law transported from N(0, I) along straight paths
/// x_τ = τ·x₁ + (1 − τ)·x₀, with τ = 0 noise and τ = 1 data.
///
/// Conditions select subsets of a shared mixture; the conditional law is the
/// mixture renormalized over that subset.
class FlowSystem {
 public:
  FlowSystem(std::vector<GaussComponent> components, std::map<std::string, std::vector<std::size_t>> conditions);

  Eigen::Index dim() const { return dim_; }
  std::size_t num_components() const { return components_.size(); }
  const GaussComponent& component(std::size_t k) const { return components_.at(k); }
  const std::map<std::string, std::vector<std::size_t>>& conditions() const { return conditions_; }

  /// Component indices for a condition; all components when unconditional.
  std::vector<std::size_t> support(const Condition& cond) const;

  /// Posterior over components given x_τ = x. Valid for τ ∈ [0, 1]; at τ = 1
  /// these are data-space responsibilities.
  Posterior posterior(const Vec& x, double tau, const Condition& cond) const;

  /// E[x₁ − x₀ | x_τ = x] under the (conditional) mixture. Requires 0 ≤ τ < 1.
  Vec marginal_velocity(const Vec& x, double tau, const Condition& cond) const;

  /// Conditional minus unconditional velocity.
  Vec error_signal(const Vec& x, double tau, const Condition& cond) const;

  /// Draw (x₀, x₁) from the coupling restricted to a condition.
  std::pair<Vec, Vec> sample_pair(Rng& rng, const Condition& cond) const;

  /// Draw from the data law of a condition.
  Vec sample_data(Rng& rng, const Condition& cond) const;

 private:
  struct Prepared {
    CholeskyFactor cov;
  };

  double log_weight_in(std::size_t k, const std::vector<std::size_t>& support) const;
  void check_tau(double tau, bool allow_one) const;

  Eigen::Index dim_ = 0;
  std::vector<GaussComponent> components_;
  std::vector<Prepared> prepared_;
  std::map<std::string, std::vector<std::size_t>> conditions_;
};

struct OracleEstimate {
  Vec estimate;
  Vec standard_error;
  double effective_sample_size = 0.0;
};

/// Default kernel bandwidth for the velocity oracle at time τ.
double default_oracle_bandwidth(double tau);

/// Kernel-weighted Monte-Carlo estimate of E[x₁ − x₀ | x_τ ≈ x], computed from
/// raw coupling draws only. Throws FlowSystemError when the effective sample
/// size falls below 100.
OracleEstimate mc_velocity_oracle(const FlowSystem& sys, const Vec& x, double tau, const Condition& cond,
                                  std::size_t n_pairs, double bandwidth, Rng& rng);

/// Two-component reference system: means (±3, 0), identity covariances,
/// equal weights. Condition "target" is the component at (+3, 0).
FlowSystem reference_system();

}  // namespace cfgctrl
