// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfgctrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double dot(const Vec& a, const Vec& b);

/// Elementwise sign with sign(0) = 0. Throws on NaN entries.
Vec sign_elementwise(const Vec& v);

/// Elementwise clamp(v / width, -1, 1); the boundary-layer relaxation of sign.
Vec saturate_elementwise(const Vec& v, double width);

bool all_finite(const Vec& v);

void require_same_dim(const Vec& a, const Vec& b, const char* what);

/// Cholesky factor of a symmetric positive definite matrix. Construction is
/// the only way to obtain one, so holding a CholeskyFactor certifies SPD.
class CholeskyFactor {
 public:
  /// Throws NumericsError when `s` is not square, not symmetric, or not SPD.
  explicit CholeskyFactor(const Mat& s);

  Vec solve(const Vec& b) const;
  Mat lower() const { return llt_.matrixL(); }
  double log_det() const;
  Eigen::Index dim() const { return matrix_.rows(); }
  const Mat& matrix() const { return matrix_; }

 private:
  Mat matrix_;
  Eigen::LLT<Mat> llt_;
};

Vec cholesky_solve(const Mat& s, const Vec& b);

/// Counter-based generator: draw n of stream (seed, stream) is a pure hash of
/// (seed, stream, n), so sequences are identical on every platform.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-ctr";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open_low();
  double normal();
  Vec normal_vec(Eigen::Index dim);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_normal_;
};

Vec gaussian_sample(Rng& rng, const Vec& mean, const CholeskyFactor& cov);
Vec gaussian_sample(Rng& rng, const Vec& mean, const Mat& cov);

/// Spectral norm by power iteration on AᵀA.
double spectral_norm(const Mat& a, double rel_tol = 1e-12, int max_iter = 10000);

/// Symmetric PSD square root via eigendecomposition, eigenvalues clamped at 0.
Mat sqrtm_psd(const Mat& s);

}  // namespace cfgctrl
