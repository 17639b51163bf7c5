// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cfgctrl {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  return a.dot(b);
}

Vec sign_elementwise(const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v[i];
    if (std::isnan(x)) throw NumericsError("sign_elementwise: NaN entry at index " + std::to_string(i));
    out[i] = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  }
  return out;
}

Vec saturate_elementwise(const Vec& v, double width) {
  if (!(width > 0.0)) throw NumericsError("saturate_elementwise: width must be positive");
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v[i])) throw NumericsError("saturate_elementwise: NaN entry at index " + std::to_string(i));
    out[i] = std::clamp(v[i] / width, -1.0, 1.0);
  }
  return out;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

void require_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw NumericsError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
}

CholeskyFactor::CholeskyFactor(const Mat& s) : matrix_(s) {
  if (s.rows() == 0 || s.rows() != s.cols()) throw NumericsError("cholesky: matrix must be square and non-empty");
  if (!s.allFinite()) throw NumericsError("cholesky: non-finite entry");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw NumericsError("cholesky: matrix not symmetric");
  llt_.compute(s);
  if (llt_.info() != Eigen::Success) throw NumericsError("cholesky: matrix not positive definite");
  const auto diag = llt_.matrixLLT().diagonal();
  if (!(diag.minCoeff() > 0.0)) throw NumericsError("cholesky: matrix not positive definite");
}

Vec CholeskyFactor::solve(const Vec& b) const {
  if (b.size() != dim()) throw NumericsError("cholesky_solve: dimension mismatch");
  return llt_.solve(b);
}

double CholeskyFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Vec cholesky_solve(const Mat& s, const Vec& b) { return CholeskyFactor(s).solve(b); }

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(mix64(seed) ^ (stream * kGolden + 0x632be59bd9b4e019ULL))) {}

std::uint64_t Rng::next_u64() {
  const std::uint64_t n = counter_++;
  return mix64(mix64(key_ + n * kGolden) ^ key_);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open_low() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

double Rng::normal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  const double u1 = uniform_open_low();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

Vec Rng::normal_vec(Eigen::Index dim) {
  Vec z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z[i] = normal();
  return z;
}

Vec gaussian_sample(Rng& rng, const Vec& mean, const CholeskyFactor& cov) {
  if (mean.size() != cov.dim()) throw NumericsError("gaussian_sample: dimension mismatch");
  return mean + cov.lower() * rng.normal_vec(mean.size());
}

Vec gaussian_sample(Rng& rng, const Vec& mean, const Mat& cov) {
  return gaussian_sample(rng, mean, CholeskyFactor(cov));
}

double spectral_norm(const Mat& a, double rel_tol, int max_iter) {
  if (a.size() == 0) return 0.0;
  const Mat ata = a.transpose() * a;
  Vec v = Vec::Ones(ata.cols()) / std::sqrt(static_cast<double>(ata.cols()));
  // Deterministic perturbation so the start vector is not orthogonal to the top
  // singular vector for structured inputs.
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * static_cast<double>(i + 1);
  v.normalize();
  double sigma2 = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec w = ata * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - sigma2) <= rel_tol * std::max(next, 1e-300)) {
      sigma2 = next;
      break;
    }
    sigma2 = next;
  }
  return std::sqrt(std::max(sigma2, 0.0));
}

Mat sqrtm_psd(const Mat& s) {
  const Mat sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericsError("sqrtm_psd: eigendecomposition failed");
  const Vec roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace cfgctrl
