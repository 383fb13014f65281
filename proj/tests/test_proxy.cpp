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
#include "ovsnet/proxy.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace ovsnet {
namespace {

EmbeddingSet random_set(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return EmbeddingSet{std::move(m)};
}

Embedding vec2(double x, double y) {
  Embedding v(2);
  v << x, y;
  return v;
}

TEST(SampleAlpha, OpenIntervalAndDeterminism) {
  ProxyConfig cfg;
  cfg.gamma = 2.0;
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_alpha(cfg, a);
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
    ASSERT_EQ(x, sample_alpha(cfg, b));
  }
  ProxyConfig bad;
  bad.gamma = 0.0;
  Rng rng(1);
  EXPECT_THROW(sample_alpha(bad, rng), ConfigError);
}

TEST(MixPair, EndpointsAndArithmetic) {
  const Embedding a = vec2(1, 0);
  const Embedding b = vec2(0, 1);
  EXPECT_NEAR((mix_pair(a, b, 1.0) - a).norm(), 0.0, 0.0);
  EXPECT_NEAR((mix_pair(a, b, 0.0) - b).norm(), 0.0, 0.0);
  const Embedding q = mix_pair(a, b, 0.25);
  EXPECT_DOUBLE_EQ(q[0], 0.25);
  EXPECT_DOUBLE_EQ(q[1], 0.75);
  Embedding three(3);
  three << 1, 2, 3;
  EXPECT_THROW(mix_pair(a, three, 0.5), DataError);
  EXPECT_THROW(mix_pair(a, b, 1.5), ConfigError);
}

TEST(MixPair, ElementwiseOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Embedding a(6), b(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const double alpha = rng.uniform();
    const Embedding mixed = mix_pair(a, b, alpha);
    for (int i = 0; i < 6; ++i) {
      EXPECT_EQ(mixed[i], alpha * a[i] + (1.0 - alpha) * b[i]);
    }
  }
}

TEST(BuildProxyBatch, TwoRowDerangement) {
  Rng rng(3);
  const auto f_q = random_set(2, 4, rng);
  const auto f_c = random_set(2, 4, rng);
  const auto f_t = random_set(2, 4, rng);
  ProxyConfig cfg;
  cfg.seed = 11;
  const ProxyBatch batch = build_proxy_batch(f_q, f_c, f_t, cfg);
  ASSERT_EQ(batch.size(), 2);
  EXPECT_EQ(batch.pair_indices[0], (std::pair<Eigen::Index, Eigen::Index>{0, 1}));
  EXPECT_EQ(batch.pair_indices[1], (std::pair<Eigen::Index, Eigen::Index>{1, 0}));
}

TEST(BuildProxyBatch, AllPairsCount) {
  Rng rng(4);
  const auto f_q = random_set(3, 4, rng);
  const auto f_c = random_set(3, 4, rng);
  const auto f_t = random_set(3, 4, rng);
  ProxyConfig cfg;
  cfg.pairing = Pairing::kAllPairs;
  const ProxyBatch batch = build_proxy_batch(f_q, f_c, f_t, cfg);
  EXPECT_EQ(batch.size(), 3);  // C(3, 2)
  std::set<std::pair<Eigen::Index, Eigen::Index>> pairs(
      batch.pair_indices.begin(), batch.pair_indices.end());
  EXPECT_EQ(pairs.size(), 3u);
}

// Every output row must reproduce from its recorded (m, n, alpha) across all
// three feature sets.
TEST(BuildProxyBatch, ConsistentAcrossSets) {
  Rng rng(5);
  const auto f_q = random_set(6, 5, rng);
  const auto f_c = random_set(6, 5, rng);
  const auto f_t = random_set(6, 5, rng);
  ProxyConfig cfg;
  cfg.seed = 77;
  const ProxyBatch batch = build_proxy_batch(f_q, f_c, f_t, cfg);
  ASSERT_EQ(batch.size(), 6);
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const auto [m, n] = batch.pair_indices[static_cast<std::size_t>(i)];
    const double a = batch.alphas[static_cast<std::size_t>(i)];
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
    EXPECT_NE(m, n);
    const Eigen::RowVectorXd eq =
        a * f_q.values.row(m) + (1.0 - a) * f_q.values.row(n);
    const Eigen::RowVectorXd ec =
        a * f_c.values.row(m) + (1.0 - a) * f_c.values.row(n);
    const Eigen::RowVectorXd et =
        a * f_t.values.row(m) + (1.0 - a) * f_t.values.row(n);
    EXPECT_NEAR((batch.mixed_query.row(i) - eq).norm(), 0.0, 0.0);
    EXPECT_NEAR((batch.mixed_clip.row(i) - ec).norm(), 0.0, 0.0);
    EXPECT_NEAR((batch.mixed_text.row(i) - et).norm(), 0.0, 0.0);
  }
}

TEST(BuildProxyBatch, DeterministicAndErrors) {
  Rng rng(6);
  const auto f_q = random_set(4, 3, rng);
  const auto f_c = random_set(4, 3, rng);
  const auto f_t = random_set(4, 3, rng);
  ProxyConfig cfg;
  cfg.seed = 123;
  const ProxyBatch a = build_proxy_batch(f_q, f_c, f_t, cfg);
  const ProxyBatch b = build_proxy_batch(f_q, f_c, f_t, cfg);
  EXPECT_EQ((a.mixed_query - b.mixed_query).norm(), 0.0);
  EXPECT_EQ(a.alphas, b.alphas);
  EXPECT_EQ(a.pair_indices, b.pair_indices);

  const auto one = random_set(1, 3, rng);
  EXPECT_THROW(build_proxy_batch(one, one, one, cfg), ConfigError);
  const auto five = random_set(5, 3, rng);
  EXPECT_THROW(build_proxy_batch(five, f_c, f_t, cfg), DataError);
}

// Mixing is convex: results stay inside the segment, so the norm is bounded
// by the larger parent norm.
TEST(BuildProxyBatch, ConvexityBound) {
  Rng rng(8);
  const auto f_q = random_set(10, 4, rng);
  const auto f_c = random_set(10, 4, rng);
  const auto f_t = random_set(10, 4, rng);
  ProxyConfig cfg;
  cfg.seed = 9;
  const ProxyBatch batch = build_proxy_batch(f_q, f_c, f_t, cfg);
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const auto [m, n] = batch.pair_indices[static_cast<std::size_t>(i)];
    const double bound = std::max(f_q.values.row(m).norm(),
                                  f_q.values.row(n).norm());
    EXPECT_LE(batch.mixed_query.row(i).norm(), bound + 1e-12);
  }
}

ProxyBatch batch_from_rows(const Matrix& q, const Matrix& c, const Matrix& t) {
  ProxyBatch batch;
  batch.mixed_query = q;
  batch.mixed_clip = c;
  batch.mixed_text = t;
  batch.alphas.assign(static_cast<std::size_t>(q.rows()), 0.5);
  batch.pair_indices.assign(static_cast<std::size_t>(q.rows()), {0, 1});
  return batch;
}

TEST(ProxyLoss, ParallelOrthogonalAntiparallel) {
  Matrix t(1, 2);
  t << 1, 0;
  {
    const ProxyLoss loss = proxy_loss(batch_from_rows(t, t, t));
    EXPECT_NEAR(loss.l_pq, 0.0, 1e-12);
    EXPECT_NEAR(loss.l_pc, 0.0, 1e-12);
    EXPECT_NEAR(loss.total, 0.0, 1e-12);
  }
  {
    Matrix q(1, 2);
    q << 0, 1;
    const ProxyLoss loss = proxy_loss(batch_from_rows(q, q, t));
    EXPECT_NEAR(loss.l_pq, 1.0, 1e-12);
    EXPECT_NEAR(loss.l_pc, 1.0, 1e-12);
    EXPECT_NEAR(loss.total, 2.0, 1e-12);
  }
  {
    Matrix q(1, 2);
    q << -1, 0;
    const ProxyLoss loss = proxy_loss(batch_from_rows(q, t, t));
    EXPECT_NEAR(loss.l_pq, 2.0, 1e-12);
    EXPECT_NEAR(loss.l_pc, 0.0, 1e-12);
  }
}

TEST(ProxyLoss, ZeroNormRowIdentified) {
  Matrix t(2, 2);
  t << 1, 0, 0, 1;
  Matrix q = t;
  q.row(1).setZero();
  try {
    proxy_loss(batch_from_rows(q, t, t));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(ProxyLoss, RangeAndScaleInvariance) {
  Rng rng(12);
  Matrix q(20, 6), c(20, 6), t(20, 6);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    q(i) = rng.normal();
    c(i) = rng.normal();
    t(i) = rng.normal();
  }
  const ProxyLoss loss = proxy_loss(batch_from_rows(q, c, t));
  EXPECT_GE(loss.l_pq, 0.0);
  EXPECT_LE(loss.l_pq, 2.0);
  EXPECT_GE(loss.l_pc, 0.0);
  EXPECT_LE(loss.l_pc, 2.0);
  EXPECT_DOUBLE_EQ(loss.total, loss.l_pq + loss.l_pc);

  Matrix q_scaled = q;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    q_scaled.row(i) *= 0.5 + 10.0 * rng.uniform();
  }
  const ProxyLoss scaled = proxy_loss(batch_from_rows(q_scaled, c, t));
  EXPECT_NEAR(scaled.l_pq, loss.l_pq, 1e-12);
  EXPECT_NEAR(scaled.l_pc, loss.l_pc, 1e-12);
}

TEST(ProxyLossGrad, ZeroAtParallelRows) {
  Matrix t(1, 3);
  t << 0.3, -0.4, 1.2;
  const ProxyGradients grads = proxy_loss_grad(batch_from_rows(t, t, t));
  EXPECT_LT(grads.d_mixed_query.norm(), 1e-10);
  EXPECT_LT(grads.d_mixed_clip.norm(), 1e-10);
}

// Central finite differences on the batch-mean loss, h = 1e-5.
TEST(ProxyLossGrad, MatchesFiniteDifferences) {
  Rng rng(13);
  const int rows = 10;
  const int d = 8;
  Matrix q(rows, d), c(rows, d), t(rows, d);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    q(i) = rng.normal();
    c(i) = rng.normal();
    t(i) = rng.normal();
  }
  const ProxyBatch batch = batch_from_rows(q, c, t);
  const ProxyGradients grads = proxy_loss_grad(batch, true);
  const double h = 1e-5;
  double max_rel = 0.0;
  auto check = [&](Matrix& target, const Matrix& analytic) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index k = 0; k < d; ++k) {
        ProxyBatch probe = batch;
        Matrix* pm = (&target == &q) ? &probe.mixed_query
                     : (&target == &c) ? &probe.mixed_clip
                                       : &probe.mixed_text;
        (*pm)(r, k) += h;
        const double up = proxy_loss(probe).total;
        (*pm)(r, k) -= 2.0 * h;
        const double down = proxy_loss(probe).total;
        const double fd = (up - down) / (2.0 * h);
        const double a = analytic(r, k);
        const double rel =
            std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-8});
        max_rel = std::max(max_rel, rel);
      }
    }
  };
  check(q, grads.d_mixed_query);
  check(c, grads.d_mixed_clip);
  check(t, *grads.d_mixed_text);
  EXPECT_LT(max_rel, 1e-4);
}

// The cosine only sees directions, so the gradient has no radial component.
TEST(ProxyLossGrad, OrthogonalToItsRow) {
  Rng rng(14);
  Matrix q(8, 5), c(8, 5), t(8, 5);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    q(i) = rng.normal();
    c(i) = rng.normal();
    t(i) = rng.normal();
  }
  const ProxyBatch batch = batch_from_rows(q, c, t);
  const ProxyGradients grads = proxy_loss_grad(batch);
  for (Eigen::Index r = 0; r < 8; ++r) {
    EXPECT_NEAR(grads.d_mixed_query.row(r).dot(q.row(r)), 0.0, 1e-12);
    EXPECT_NEAR(grads.d_mixed_clip.row(r).dot(c.row(r)), 0.0, 1e-12);
  }
}

}  // namespace
}  // namespace ovsnet
