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
#ifndef OVSNET_PROXY_HPP
#define OVSNET_PROXY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ovsnet/embedding.hpp"
#include "ovsnet/errors.hpp"
#include "ovsnet/random.hpp"

namespace ovsnet {

// Proxy Calibration: synthesize stand-ins for unseen semantics by convex
// mixing of index-aligned query / CLIP / text embedding triples, then score
// the mixed triples with cosine-distance losses
//
//   L_PQ = 1 - cos(F'_Q, F'_T),   L_PC = 1 - cos(F'_C, F'_T).
//
// The mixing weight alpha is drawn from Beta(gamma, gamma); gamma = 1 is the
// uniform (no-calibration) baseline.

enum class Pairing { kRandomDerangement, kAllPairs };

struct ProxyConfig {
  double gamma = 2.0;
  std::uint64_t seed = 0;
  Pairing pairing = Pairing::kRandomDerangement;

  void validate() const {
    if (!(gamma > 0.0)) {
      throw ConfigError("proxy: gamma must be > 0, got " +
                        std::to_string(gamma));
    }
  }
};

struct ProxyBatch {
  Matrix mixed_query;  // M x d
  Matrix mixed_clip;   // M x d
  Matrix mixed_text;   // M x d
  std::vector<double> alphas;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pair_indices;

  Eigen::Index size() const { return mixed_query.rows(); }
};

/// One Beta(gamma, gamma) draw, rejected back into the open interval (0, 1).
inline double sample_alpha(const ProxyConfig& cfg, Rng& rng) {
  cfg.validate();
  for (;;) {
    const double a = rng.beta(cfg.gamma, cfg.gamma);
    if (a > 0.0 && a < 1.0) return a;
  }
}

inline Embedding mix_pair(const Embedding& a, const Embedding& b,
                          double alpha) {
  if (a.size() != b.size()) {
    throw DataError("mix_pair: dimension mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("mix_pair: alpha must lie in [0, 1], got " +
                      std::to_string(alpha));
  }
  return alpha * a + (1.0 - alpha) * b;
}

/// Draws pairs (m, n) and one alpha per pair, then applies the same mix to
/// the query, CLIP, and text rows. The three sets must be index-aligned.
inline ProxyBatch build_proxy_batch(const EmbeddingSet& f_q,
                                    const EmbeddingSet& f_c,
                                    const EmbeddingSet& f_t,
                                    const ProxyConfig& cfg) {
  cfg.validate();
  f_q.validate();
  f_c.validate();
  f_t.validate();
  const Eigen::Index n = f_q.count();
  if (f_c.count() != n || f_t.count() != n) {
    throw DataError("build_proxy_batch: row counts differ (" +
                    std::to_string(n) + ", " + std::to_string(f_c.count()) +
                    ", " + std::to_string(f_t.count()) + ")");
  }
  if (n < 2) {
    throw ConfigError("build_proxy_batch: need at least 2 rows to form pairs");
  }

  Rng rng(cfg.seed);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  if (cfg.pairing == Pairing::kRandomDerangement) {
    const auto perm = random_derangement(static_cast<std::size_t>(n), rng);
    pairs.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      pairs.emplace_back(i, static_cast<Eigen::Index>(
                                perm[static_cast<std::size_t>(i)]));
    }
  } else {
    for (Eigen::Index m = 0; m < n; ++m) {
      for (Eigen::Index k = m + 1; k < n; ++k) pairs.emplace_back(m, k);
    }
  }

  ProxyBatch batch;
  const Eigen::Index count = static_cast<Eigen::Index>(pairs.size());
  batch.mixed_query.resize(count, f_q.dim());
  batch.mixed_clip.resize(count, f_c.dim());
  batch.mixed_text.resize(count, f_t.dim());
  batch.alphas.reserve(pairs.size());
  batch.pair_indices = std::move(pairs);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto [m, k] = batch.pair_indices[static_cast<std::size_t>(i)];
    const double alpha = sample_alpha(cfg, rng);
    batch.alphas.push_back(alpha);
    batch.mixed_query.row(i) =
        alpha * f_q.values.row(m) + (1.0 - alpha) * f_q.values.row(k);
    batch.mixed_clip.row(i) =
        alpha * f_c.values.row(m) + (1.0 - alpha) * f_c.values.row(k);
    batch.mixed_text.row(i) =
        alpha * f_t.values.row(m) + (1.0 - alpha) * f_t.values.row(k);
  }
  return batch;
}

struct ProxyLoss {
  double l_pq = 0.0;
  double l_pc = 0.0;
  double total = 0.0;
};

namespace detail {

inline void check_mixed_shapes(const ProxyBatch& batch) {
  if (batch.size() < 1) throw DataError("proxy loss: empty batch");
  if (batch.mixed_clip.rows() != batch.size() ||
      batch.mixed_text.rows() != batch.size()) {
    throw DataError("proxy loss: mixed matrices disagree on row count");
  }
  if (batch.mixed_query.cols() != batch.mixed_text.cols() ||
      batch.mixed_clip.cols() != batch.mixed_text.cols()) {
    throw DataError("proxy loss: mixed matrices disagree on dimension");
  }
}

inline double row_norm_checked(const Matrix& m, Eigen::Index row,
                               const char* name) {
  const double n = m.row(row).norm();
  if (n == 0.0) {
    throw DataError(std::string("proxy loss: zero-norm ") + name + " row " +
                    std::to_string(row));
  }
  return n;
}

}  // namespace detail

/// Batch-mean cosine-distance losses. Each per-row loss lies in [0, 2].
inline ProxyLoss proxy_loss(const ProxyBatch& batch) {
  detail::check_mixed_shapes(batch);
  const Eigen::Index m = batch.size();
  double sum_pq = 0.0;
  double sum_pc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double nq = detail::row_norm_checked(batch.mixed_query, i, "query");
    const double nc = detail::row_norm_checked(batch.mixed_clip, i, "clip");
    const double nt = detail::row_norm_checked(batch.mixed_text, i, "text");
    const double cos_qt =
        batch.mixed_query.row(i).dot(batch.mixed_text.row(i)) / (nq * nt);
    const double cos_ct =
        batch.mixed_clip.row(i).dot(batch.mixed_text.row(i)) / (nc * nt);
    sum_pq += 1.0 - std::clamp(cos_qt, -1.0, 1.0);
    sum_pc += 1.0 - std::clamp(cos_ct, -1.0, 1.0);
  }
  ProxyLoss loss;
  loss.l_pq = sum_pq / static_cast<double>(m);
  loss.l_pc = sum_pc / static_cast<double>(m);
  loss.total = loss.l_pq + loss.l_pc;
  return loss;
}

struct ProxyGradients {
  Matrix d_mixed_query;  // d(total)/d(mixed_query), M x d
  Matrix d_mixed_clip;   // d(total)/d(mixed_clip), M x d
  std::optional<Matrix> d_mixed_text;
};

/// Analytic gradients of the batch-mean proxy loss. For one row with
/// u = q/|q| and v = t/|t|, d(1 - cos)/dq = (cos * u - v) / |q|; the
/// gradient is orthogonal to q since the cosine only sees directions.
inline ProxyGradients proxy_loss_grad(const ProxyBatch& batch,
                                      bool include_text_grad = false) {
  detail::check_mixed_shapes(batch);
  const Eigen::Index m = batch.size();
  const double inv_m = 1.0 / static_cast<double>(m);
  ProxyGradients grads;
  grads.d_mixed_query = Matrix::Zero(m, batch.mixed_query.cols());
  grads.d_mixed_clip = Matrix::Zero(m, batch.mixed_clip.cols());
  if (include_text_grad) {
    grads.d_mixed_text = Matrix::Zero(m, batch.mixed_text.cols());
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double nq = detail::row_norm_checked(batch.mixed_query, i, "query");
    const double nc = detail::row_norm_checked(batch.mixed_clip, i, "clip");
    const double nt = detail::row_norm_checked(batch.mixed_text, i, "text");
    const Eigen::RowVectorXd uq = batch.mixed_query.row(i) / nq;
    const Eigen::RowVectorXd uc = batch.mixed_clip.row(i) / nc;
    const Eigen::RowVectorXd ut = batch.mixed_text.row(i) / nt;
    const double cos_qt = uq.dot(ut);
    const double cos_ct = uc.dot(ut);
    grads.d_mixed_query.row(i) = inv_m * (cos_qt * uq - ut) / nq;
    grads.d_mixed_clip.row(i) = inv_m * (cos_ct * uc - ut) / nc;
    if (include_text_grad) {
      grads.d_mixed_text->row(i) =
          inv_m * ((cos_qt * ut - uq) + (cos_ct * ut - uc)) / nt;
    }
  }
  return grads;
}

/// Worst relative disagreement between the analytic gradients and central
/// finite differences of the batch-mean loss over every mixed entry. The
/// denominator floor keeps FD rounding noise from dominating at stationary
/// points, where both sides are legitimately near zero.
inline double proxy_grad_fd_error(const ProxyBatch& batch, double h = 1e-5) {
  const ProxyGradients grads = proxy_loss_grad(batch, true);
  double max_rel = 0.0;
  ProxyBatch probe = batch;
  auto sweep = [&](Matrix& target, const Matrix& analytic) {
    for (Eigen::Index r = 0; r < target.rows(); ++r) {
      for (Eigen::Index c = 0; c < target.cols(); ++c) {
        const double saved = target(r, c);
        target(r, c) = saved + h;
        const double up = proxy_loss(probe).total;
        target(r, c) = saved - h;
        const double down = proxy_loss(probe).total;
        target(r, c) = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = analytic(r, c);
        const double rel =
            std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-5});
        max_rel = std::max(max_rel, rel);
      }
    }
  };
  sweep(probe.mixed_query, grads.d_mixed_query);
  sweep(probe.mixed_clip, grads.d_mixed_clip);
  sweep(probe.mixed_text, *grads.d_mixed_text);
  return max_rel;
}

}  // namespace ovsnet

#endif  // OVSNET_PROXY_HPP
