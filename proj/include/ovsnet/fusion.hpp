/* Copyright 2026 The OVSNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef OVSNET_FUSION_HPP
#define OVSNET_FUSION_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "ovsnet/embedding.hpp"
#include "ovsnet/errors.hpp"
#include "ovsnet/random.hpp"

namespace ovsnet {

// Gradient-Free Aggregation: a random-walk style fusion of decoder query
// embeddings F_Q (n_q x d) and mask-pooled CLIP features F_C (n_c x d).
//
// With affinity Z = lambda * F_C * F_Q^T, the two-step update per round is
//
//   F_Q <- omega * Norm(Z)^T * F_C + (1 - omega) * F_Q0
//   F_C <- omega * Z * F_Q        + (1 - omega) * F_C0
//
// and the fixed point has the closed form
//
//   F_C_inf = (1 - omega) * (I - omega^2 A)^-1 * (omega * Z * F_Q0 + F_C0),
//
// where A = Z * Norm(Z)^T. The closed form is a Neumann-series limit and is
// valid only while the spectral radius of omega^2 A stays below 1.

enum class NormalizeMode { kColumnSoftmax, kColumnL1 };

struct FusionConfig {
  double lambda = 0.2;  // affinity scale
  double omega = 0.5;   // fusion factor, strictly inside (0, 1)
  int max_iters = 100;
  double tolerance = 1e-9;  // Frobenius norm of the F_C step
  NormalizeMode normalize_mode = NormalizeMode::kColumnSoftmax;

  void validate() const {
    if (!(lambda > 0.0)) {
      throw ConfigError("fusion: lambda must be > 0, got " +
                        std::to_string(lambda));
    }
    if (!(omega > 0.0 && omega < 1.0)) {
      throw ConfigError("fusion: omega must lie strictly inside (0, 1), got " +
                        std::to_string(omega));
    }
    if (max_iters < 1) {
      throw ConfigError("fusion: max_iters must be >= 1");
    }
    if (!(tolerance > 0.0)) {
      throw ConfigError("fusion: tolerance must be > 0");
    }
  }
};

struct AffinityMatrix {
  Matrix z;  // n_c x n_q
};

struct FusionResult {
  Matrix fused_clip;   // n_c x d
  Matrix fused_query;  // n_q x d
  int iterations_used = 0;
  bool converged = false;
  double spectral_radius_estimate = 0.0;
};

/// Z = lambda * F_C * F_Q^T. lambda = 0 is accepted here and yields the zero
/// matrix; solver entry points reject it through FusionConfig::validate().
inline AffinityMatrix compute_affinity(const EmbeddingSet& f_c,
                                       const EmbeddingSet& f_q,
                                       double lambda) {
  if (f_c.count() < 1 || f_q.count() < 1) {
    throw DataError("compute_affinity: empty embedding set");
  }
  if (f_c.dim() != f_q.dim()) {
    throw DataError("compute_affinity: dimension mismatch (" +
                    std::to_string(f_c.dim()) + " vs " +
                    std::to_string(f_q.dim()) + ")");
  }
  if (!std::isfinite(lambda)) {
    throw ConfigError("compute_affinity: lambda must be finite");
  }
  return AffinityMatrix{lambda * (f_c.values * f_q.values.transpose())};
}

/// Column normalization, so that the rows of Norm(Z)^T are mixing weights.
/// Softmax exponentiates (with the usual max shift) before normalizing;
/// L1 divides by the per-column sum of absolute values.
inline AffinityMatrix normalize_affinity(const AffinityMatrix& affinity,
                                         NormalizeMode mode) {
  const Matrix& z = affinity.z;
  if (z.rows() < 1 || z.cols() < 1) {
    throw DataError("normalize_affinity: empty affinity matrix");
  }
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if (mode == NormalizeMode::kColumnSoftmax) {
      const double m = z.col(j).maxCoeff();
      Eigen::VectorXd e = (z.col(j).array() - m).exp();
      out.col(j) = e / e.sum();
    } else {
      const double s = z.col(j).array().abs().sum();
      if (s == 0.0) {
        throw DataError("normalize_affinity: column " + std::to_string(j) +
                        " is all zeros under l1 normalization");
      }
      out.col(j) = z.col(j) / s;
    }
  }
  return AffinityMatrix{std::move(out)};
}

/// Power-iteration estimate of the spectral radius. Deterministic: the start
/// vector comes from a fixed seed. Returns +inf if the iteration overflows.
inline double estimate_spectral_radius(const Matrix& m, int steps = 50,
                                       double tol = 1e-6) {
  if (m.rows() != m.cols()) {
    throw DataError("estimate_spectral_radius: matrix must be square");
  }
  if (m.rows() == 0) return 0.0;
  Rng rng(0x5eedbeefULL);
  Eigen::VectorXd v(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double estimate = 0.0;
  for (int step = 0; step < steps; ++step) {
    const Eigen::VectorXd w = m * v;
    const double n = w.norm();
    if (!std::isfinite(n)) return std::numeric_limits<double>::infinity();
    if (n == 0.0) return 0.0;
    if (step > 0 && std::abs(n - estimate) <= tol * std::max(1.0, n)) {
      return n;
    }
    estimate = n;
    v = w / n;
  }
  return estimate;
}

namespace detail {

struct FusionOperators {
  Matrix z;       // n_c x n_q
  Matrix norm_z;  // n_c x n_q, columns sum to 1 (softmax) or are L1-scaled
  Matrix a;       // n_c x n_c, Z * Norm(Z)^T
  double rho;     // spectral radius estimate of omega^2 * A
};

inline FusionOperators make_fusion_operators(const EmbeddingSet& f_q0,
                                             const EmbeddingSet& f_c0,
                                             const FusionConfig& cfg) {
  cfg.validate();
  f_q0.validate();
  f_c0.validate();
  FusionOperators ops;
  ops.z = compute_affinity(f_c0, f_q0, cfg.lambda).z;
  ops.norm_z = normalize_affinity(AffinityMatrix{ops.z}, cfg.normalize_mode).z;
  ops.a = ops.z * ops.norm_z.transpose();
  ops.rho = estimate_spectral_radius(cfg.omega * cfg.omega * ops.a);
  return ops;
}

}  // namespace detail

/// Runs the two-step update until the F_C step drops below cfg.tolerance in
/// Frobenius norm or cfg.max_iters rounds elapse.
inline FusionResult gfa_iterate(const EmbeddingSet& f_q0,
                                const EmbeddingSet& f_c0,
                                const FusionConfig& cfg) {
  const auto ops = detail::make_fusion_operators(f_q0, f_c0, cfg);
  const double w = cfg.omega;

  FusionResult result;
  result.spectral_radius_estimate = ops.rho;
  Matrix fc = f_c0.values;
  Matrix fq = f_q0.values;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    fq = w * (ops.norm_z.transpose() * fc) + (1.0 - w) * f_q0.values;
    Matrix fc_next = w * (ops.z * fq) + (1.0 - w) * f_c0.values;
    if (!fc_next.allFinite() || !fq.allFinite()) {
      throw ConfigError(
          "gfa_iterate: diverged at iteration " + std::to_string(t) +
          " (spectral radius estimate " + std::to_string(ops.rho) + ")");
    }
    const double delta = (fc_next - fc).norm();
    fc = std::move(fc_next);
    result.iterations_used = t;
    if (delta <= cfg.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.fused_clip = std::move(fc);
  result.fused_query = std::move(fq);
  return result;
}

/// Direct evaluation of the unrolled recursion
///   F_C^t = (w^2 A)^t F_C0 + (1-w) sum_{i=0}^{t-1} (w^2 A)^i (w Z F_Q0 + F_C0)
/// via explicit matrix powers. Exists to cross-check gfa_iterate.
inline Matrix gfa_unrolled(const EmbeddingSet& f_q0, const EmbeddingSet& f_c0,
                           const FusionConfig& cfg, int t) {
  if (t < 1) throw ConfigError("gfa_unrolled: t must be >= 1");
  const auto ops = detail::make_fusion_operators(f_q0, f_c0, cfg);
  const double w = cfg.omega;
  const Matrix m = (w * w) * ops.a;
  const Matrix base = w * (ops.z * f_q0.values) + f_c0.values;

  Matrix power = Matrix::Identity(m.rows(), m.cols());
  Matrix series = Matrix::Zero(base.rows(), base.cols());
  for (int i = 0; i < t; ++i) {
    series += power * base;
    power = power * m;  // ends at m^t
  }
  Matrix result = power * f_c0.values + (1.0 - w) * series;
  if (!result.allFinite()) {
    throw ConfigError(
        "gfa_unrolled: diverged at iteration " + std::to_string(t) +
        " (spectral radius estimate " + std::to_string(ops.rho) + ")");
  }
  return result;
}

/// Neumann-series fixed point: solves (I - w^2 A) X = w Z F_Q0 + F_C0 with a
/// dense factorization and scales by (1 - w). Requires rho(w^2 A) < 1.
inline FusionResult gfa_closed_form(const EmbeddingSet& f_q0,
                                    const EmbeddingSet& f_c0,
                                    const FusionConfig& cfg) {
  const auto ops = detail::make_fusion_operators(f_q0, f_c0, cfg);
  const double w = cfg.omega;
  if (!(ops.rho < 1.0)) {
    throw ConfigError(
        "gfa_closed_form: non-convergent configuration (lambda=" +
        std::to_string(cfg.lambda) + ", omega=" + std::to_string(cfg.omega) +
        ", spectral radius estimate " + std::to_string(ops.rho) + " >= 1)");
  }
  const Matrix lhs =
      Matrix::Identity(ops.a.rows(), ops.a.cols()) - (w * w) * ops.a;
  const Matrix rhs = w * (ops.z * f_q0.values) + f_c0.values;
  Eigen::FullPivLU<Matrix> lu(lhs);
  if (!lu.isInvertible()) {
    throw ConfigError("gfa_closed_form: singular system (I - omega^2 A)");
  }
  FusionResult result;
  result.fused_clip = (1.0 - w) * lu.solve(rhs);
  // The query side has no stated closed form; report the two-step query
  // update evaluated at the converged F_C.
  result.fused_query = w * (ops.norm_z.transpose() * result.fused_clip) +
                       (1.0 - w) * f_q0.values;
  result.iterations_used = 0;
  result.converged = true;
  result.spectral_radius_estimate = ops.rho;
  return result;
}

enum class ReduceMode { kMean, kFirst };

/// Collapses the fused CLIP rows to one region embedding.
inline Embedding reduce_fused(const FusionResult& result, ReduceMode mode) {
  if (result.fused_clip.rows() < 1) {
    throw DataError("reduce_fused: empty fusion result");
  }
  if (mode == ReduceMode::kFirst) {
    return result.fused_clip.row(0).transpose();
  }
  return result.fused_clip.colwise().mean().transpose();
}

}  // namespace ovsnet

#endif  // OVSNET_FUSION_HPP
