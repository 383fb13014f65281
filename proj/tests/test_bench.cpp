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
#include "ovsnet/bench.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ovsnet/io.hpp"
#include "ovsnet/random.hpp"

namespace ovsnet {
namespace {

EmbeddingSet labeled_set(Matrix m, std::vector<std::string> labels) {
  return EmbeddingSet{std::move(m), std::move(labels)};
}

TEST(ScoreCategories, SelfAndOrthogonal) {
  Matrix train(2, 3);
  train << 1, 0, 0, 0, 1, 0;
  const auto vocab = labeled_set(train, {"t0", "t1"});

  Matrix cand(2, 3);
  cand << 1, 0, 0,  // identical to t0
      0, 0, 1;      // orthogonal to both
  const auto candidates = labeled_set(cand, {"same", "novel"});

  const auto scores = score_categories(candidates, vocab);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_EQ(scores[0].name, "same");
  EXPECT_DOUBLE_EQ(scores[0].max_train_similarity, 1.0);
  EXPECT_EQ(scores[1].name, "novel");
  EXPECT_DOUBLE_EQ(scores[1].max_train_similarity, 0.0);
}

TEST(ScoreCategories, MatchesDoubleLoopOracle) {
  Rng rng(61);
  Matrix cand(5, 4), train(10, 4);
  for (Eigen::Index i = 0; i < cand.size(); ++i) cand(i) = rng.normal();
  for (Eigen::Index i = 0; i < train.size(); ++i) train(i) = rng.normal();
  std::vector<std::string> cls, tls;
  for (int i = 0; i < 5; ++i) cls.push_back("c" + std::to_string(i));
  for (int i = 0; i < 10; ++i) tls.push_back("t" + std::to_string(i));
  const auto candidates = labeled_set(cand, cls);
  const auto vocab = labeled_set(train, tls);
  const auto scores = score_categories(candidates, vocab);
  for (int i = 0; i < 5; ++i) {
    double best = -1.0;
    for (int j = 0; j < 10; ++j) {
      const double dot = cand.row(i).dot(train.row(j));
      best = std::max(best, dot / (cand.row(i).norm() * train.row(j).norm()));
    }
    EXPECT_NEAR(scores[static_cast<std::size_t>(i)].max_train_similarity, best,
                1e-12);
  }
}

// Candidate order carries through; training-vocabulary order is irrelevant.
TEST(ScoreCategories, PermutationBehaviour) {
  Rng rng(64);
  Matrix cand(4, 3), train(5, 3);
  for (Eigen::Index i = 0; i < cand.size(); ++i) cand(i) = rng.normal();
  for (Eigen::Index i = 0; i < train.size(); ++i) train(i) = rng.normal();
  const auto candidates = labeled_set(cand, {"a", "b", "c", "d"});
  const auto vocab = labeled_set(train, {"t0", "t1", "t2", "t3", "t4"});

  Matrix cand_rev = cand.colwise().reverse();
  const auto candidates_rev = labeled_set(cand_rev, {"d", "c", "b", "a"});
  Matrix train_rev = train.colwise().reverse();
  const auto vocab_rev = labeled_set(train_rev, {"t4", "t3", "t2", "t1", "t0"});

  const auto forward = score_categories(candidates, vocab);
  const auto reversed_candidates = score_categories(candidates_rev, vocab);
  const auto reversed_vocab = score_categories(candidates, vocab_rev);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(forward[i].name, reversed_candidates[3 - i].name);
    EXPECT_DOUBLE_EQ(forward[i].max_train_similarity,
                     reversed_candidates[3 - i].max_train_similarity);
    EXPECT_DOUBLE_EQ(forward[i].max_train_similarity,
                     reversed_vocab[i].max_train_similarity);
  }
}

TEST(ScoreCategories, RequiresLabels) {
  Matrix m(1, 2);
  m << 1, 0;
  const EmbeddingSet unlabeled{m};
  const auto labeled = labeled_set(m, {"a"});
  EXPECT_THROW(score_categories(unlabeled, labeled), DataError);
  EXPECT_THROW(score_categories(labeled, unlabeled), DataError);
}

std::vector<CategoryScore> toy_scores() {
  return {{"cat", 0.9}, {"dog", 0.5}, {"fern", 0.3}, {"rock", 0.85}};
}

TEST(ImageSimilarity, MinRule) {
  const auto scores = toy_scores();
  EXPECT_DOUBLE_EQ(image_similarity({"cat"}, scores), 0.9);
  EXPECT_DOUBLE_EQ(image_similarity({"cat", "fern"}, scores), 0.3);
  EXPECT_THROW(image_similarity({"unknown"}, scores), DataError);
  EXPECT_THROW(image_similarity({}, scores), DataError);
}

TEST(ImageSimilarity, MatchesScanMinOracle) {
  Rng rng(62);
  std::vector<CategoryScore> scores;
  std::vector<std::string> names;
  for (int i = 0; i < 12; ++i) {
    names.push_back("n" + std::to_string(i));
    scores.push_back({names.back(), rng.uniform()});
  }
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::string> present;
    double expected = 2.0;
    for (int i = 0; i < 12; ++i) {
      if (rng.uniform() < 0.4) {
        present.push_back(names[static_cast<std::size_t>(i)]);
        expected = std::min(
            expected, scores[static_cast<std::size_t>(i)].max_train_similarity);
      }
    }
    if (present.empty()) continue;
    EXPECT_DOUBLE_EQ(image_similarity(present, scores), expected);
  }
}

std::vector<InventoryRecord> toy_inventory() {
  return {
      {"img0", "img0.msk1", {"cat"}},               // sim 0.9
      {"img1", "img1.msk1", {"cat", "fern"}},       // sim 0.3
      {"img2", "img2.msk1", {"dog", "rock"}},       // sim 0.5
      {"img3", "img3.msk1", {"rock"}},              // sim 0.85
  };
}

TEST(FilterAndRemap, ThresholdRules) {
  const auto manifest =
      filter_and_remap(toy_inventory(), toy_scores(), 0.8, 0.8);
  ASSERT_EQ(manifest.records.size(), 4u);

  // img0: sim 0.9 > 0.8 -> filtered.
  EXPECT_EQ(manifest.records[0].decision, Decision::kFiltered);
  // img1: sim 0.3 kept; "cat" (0.9 > 0.8) remapped.
  EXPECT_EQ(manifest.records[1].decision, Decision::kKept);
  ASSERT_EQ(manifest.records[1].remapped.size(), 1u);
  EXPECT_EQ(manifest.records[1].remapped[0], "cat");
  // img2: sim 0.5 kept; "rock" (0.85 > 0.8) remapped.
  EXPECT_EQ(manifest.records[2].decision, Decision::kKept);
  ASSERT_EQ(manifest.records[2].remapped.size(), 1u);
  EXPECT_EQ(manifest.records[2].remapped[0], "rock");
  // img3: sim 0.85 > 0.8 -> filtered.
  EXPECT_EQ(manifest.records[3].decision, Decision::kFiltered);

  // Survivors: dog, fern, plus the catch-all.
  ASSERT_EQ(manifest.final_categories.size(), 3u);
  EXPECT_EQ(manifest.final_categories[0], "dog");
  EXPECT_EQ(manifest.final_categories[1], "fern");
  EXPECT_EQ(manifest.final_categories[2], "others");
  EXPECT_FALSE(manifest.empty_benchmark());
}

TEST(FilterAndRemap, AllFilteredWhenEveryScoreIsOne) {
  std::vector<CategoryScore> ones{{"a", 1.0}, {"b", 1.0}};
  std::vector<InventoryRecord> inv{{"i0", "m0", {"a"}}, {"i1", "m1", {"a", "b"}}};
  const auto manifest = filter_and_remap(inv, ones, 0.8, 0.8);
  for (const auto& r : manifest.records) {
    EXPECT_EQ(r.decision, Decision::kFiltered);
  }
  EXPECT_TRUE(manifest.empty_benchmark());
  ASSERT_EQ(manifest.final_categories.size(), 1u);
  EXPECT_EQ(manifest.final_categories[0], "others");
}

TEST(FilterAndRemap, UnitThresholdsKeepEverything) {
  const auto manifest =
      filter_and_remap(toy_inventory(), toy_scores(), 1.0, 1.0);
  for (const auto& r : manifest.records) {
    EXPECT_EQ(r.decision, Decision::kKept);
    EXPECT_TRUE(r.remapped.empty());
  }
}

TEST(FilterAndRemap, RejectsInvertedThresholds) {
  EXPECT_THROW(filter_and_remap(toy_inventory(), toy_scores(), 0.5, 0.8),
               ConfigError);
}

TEST(FilterAndRemap, AllRemappedImageIsDropped) {
  // sigma2 < sigma1: an image whose categories all land in (sigma2, sigma1]
  // would keep nothing but "others".
  std::vector<CategoryScore> scores{{"a", 0.6}, {"b", 0.7}};
  std::vector<InventoryRecord> inv{{"i0", "m0", {"a", "b"}}};
  const auto manifest = filter_and_remap(inv, scores, 0.8, 0.5);
  ASSERT_EQ(manifest.records.size(), 1u);
  EXPECT_EQ(manifest.records[0].decision, Decision::kDropped);
  EXPECT_FALSE(manifest.records[0].drop_reason.empty());
  ASSERT_EQ(manifest.final_categories.size(), 1u);
  EXPECT_EQ(manifest.final_categories[0], "others");
}

TEST(FilterAndRemap, ExclusionListRemovesCategories) {
  BuildOptions options;
  options.exclude = {"fern"};
  const auto manifest =
      filter_and_remap(toy_inventory(), toy_scores(), 1.0, 1.0, options);
  // img1 loses "fern" but keeps "cat".
  ASSERT_EQ(manifest.records[1].categories.size(), 1u);
  EXPECT_EQ(manifest.records[1].categories[0], "cat");
  // A record whose only category is excluded gets dropped.
  BuildOptions drop_all;
  drop_all.exclude = {"cat"};
  std::vector<InventoryRecord> inv{{"i0", "m0", {"cat"}}};
  const auto dropped = filter_and_remap(inv, toy_scores(), 1.0, 1.0, drop_all);
  ASSERT_EQ(dropped.records.size(), 1u);
  EXPECT_EQ(dropped.records[0].decision, Decision::kDropped);
}

// Rebuilding from the kept output with the same thresholds changes nothing.
TEST(FilterAndRemap, IdempotentOnKeptOutput) {
  const double sigma1 = 0.8, sigma2 = 0.6;
  const auto first =
      filter_and_remap(toy_inventory(), toy_scores(), sigma1, sigma2);
  std::vector<InventoryRecord> survivors_inventory;
  for (const auto& r : first.records) {
    if (r.decision != Decision::kKept) continue;
    InventoryRecord inv;
    inv.image_id = r.image_id;
    inv.mask_path = r.mask_path;
    for (const auto& c : r.categories) {
      if (std::find(r.remapped.begin(), r.remapped.end(), c) ==
          r.remapped.end()) {
        inv.categories.push_back(c);
      }
    }
    survivors_inventory.push_back(std::move(inv));
  }
  const auto second =
      filter_and_remap(survivors_inventory, toy_scores(), sigma1, sigma2);
  ASSERT_EQ(second.records.size(), survivors_inventory.size());
  for (const auto& r : second.records) {
    EXPECT_EQ(r.decision, Decision::kKept);
    EXPECT_TRUE(r.remapped.empty());
  }
  EXPECT_EQ(second.final_categories, first.final_categories);
}

// Lowering sigma1 never keeps more images; raising sigma2 never remaps more.
TEST(FilterAndRemap, MonotoneInThresholds) {
  const auto inventory = toy_inventory();
  const auto scores = toy_scores();
  const std::vector<double> grid{0.2, 0.4, 0.6, 0.8, 1.0};
  for (const double sigma2 : grid) {
    std::size_t prev_kept = 0;
    for (const double sigma1 : grid) {
      if (sigma2 > sigma1) continue;
      const auto m = filter_and_remap(inventory, scores, sigma1, sigma2);
      const std::size_t kept = m.kept_count();
      EXPECT_GE(kept, prev_kept) << "sigma1=" << sigma1 << " sigma2=" << sigma2;
      prev_kept = kept;
    }
  }
  for (const double sigma1 : grid) {
    std::size_t prev_remapped = SIZE_MAX;
    for (const double sigma2 : grid) {
      if (sigma2 > sigma1) continue;
      const auto m = filter_and_remap(inventory, scores, sigma1, sigma2);
      std::size_t remapped = 0;
      for (const auto& r : m.records) remapped += r.remapped.size();
      EXPECT_LE(remapped, prev_remapped)
          << "sigma1=" << sigma1 << " sigma2=" << sigma2;
      prev_remapped = remapped;
    }
  }
}

// With sigma2 <= sigma1 every kept image retains a category at or below
// sigma2 (the all-remapped case is dropped instead).
TEST(FilterAndRemap, KeptImagesRetainNovelCategory) {
  Rng rng(63);
  std::vector<CategoryScore> scores;
  for (int i = 0; i < 20; ++i) {
    scores.push_back({"c" + std::to_string(i), rng.uniform()});
  }
  std::vector<InventoryRecord> inventory;
  for (int i = 0; i < 40; ++i) {
    InventoryRecord rec;
    rec.image_id = "img" + std::to_string(i);
    rec.mask_path = rec.image_id + ".msk1";
    for (int c = 0; c < 20; ++c) {
      if (rng.uniform() < 0.25) {
        rec.categories.push_back(scores[static_cast<std::size_t>(c)].name);
      }
    }
    if (rec.categories.empty()) rec.categories.push_back(scores[0].name);
    inventory.push_back(std::move(rec));
  }
  const auto manifest = filter_and_remap(inventory, scores, 0.7, 0.4);
  for (const auto& r : manifest.records) {
    if (r.decision != Decision::kKept) continue;
    EXPECT_LT(r.remapped.size(), r.categories.size());
  }
}

TEST(SimilarityStats, KnownValues) {
  std::vector<CategoryScore> scores{{"a", 0.2}, {"b", 0.6}, {"c", 0.8}};
  const SimilarityStats stats = similarity_stats(scores, 30);
  EXPECT_NEAR(stats.mean, 0.5333, 1e-4);
  EXPECT_DOUBLE_EQ(stats.median, 0.6);
  EXPECT_DOUBLE_EQ(stats.min, 0.2);
  EXPECT_DOUBLE_EQ(stats.max, 0.8);
  EXPECT_EQ(stats.class_count, 3u);
  EXPECT_EQ(stats.image_count, 30u);
}

TEST(SimilarityStats, EvenCountMedianIsMidpoint) {
  std::vector<CategoryScore> scores{{"a", 0.1}, {"b", 0.2}, {"c", 0.6}, {"d", 0.9}};
  const SimilarityStats stats = similarity_stats(scores);
  EXPECT_DOUBLE_EQ(stats.median, 0.4);
}

TEST(SimilarityStats, ConstantListAndEmptyError) {
  std::vector<CategoryScore> scores{{"a", 0.5}, {"b", 0.5}};
  const SimilarityStats stats = similarity_stats(scores);
  EXPECT_DOUBLE_EQ(stats.mean, 0.5);
  EXPECT_DOUBLE_EQ(stats.median, 0.5);
  EXPECT_DOUBLE_EQ(stats.min, 0.5);
  EXPECT_DOUBLE_EQ(stats.max, 0.5);
  EXPECT_THROW(similarity_stats({}), DataError);
}

TEST(Manifest, JsonRoundTrip) {
  const auto manifest =
      filter_and_remap(toy_inventory(), toy_scores(), 0.8, 0.6);
  const nlohmann::json j = manifest_to_json(manifest);
  const BenchManifest back = manifest_from_json(j);
  ASSERT_EQ(back.records.size(), manifest.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    EXPECT_EQ(back.records[i].image_id, manifest.records[i].image_id);
    EXPECT_EQ(back.records[i].decision, manifest.records[i].decision);
    EXPECT_EQ(back.records[i].remapped, manifest.records[i].remapped);
    EXPECT_DOUBLE_EQ(back.records[i].image_similarity,
                     manifest.records[i].image_similarity);
  }
  EXPECT_EQ(back.final_categories, manifest.final_categories);
  EXPECT_EQ(back.category_index, manifest.category_index);
  EXPECT_DOUBLE_EQ(back.sigma1, manifest.sigma1);
}

TEST(Manifest, CanonicalJsonIsStableAndSixDecimal) {
  nlohmann::json j{{"b", 0.5789473684}, {"a", nlohmann::json::array({1, 0.25})}};
  const std::string text = canonical_json(j);
  EXPECT_EQ(text,
            "{\n"
            "  \"a\": [\n"
            "    1,\n"
            "    0.250000\n"
            "  ],\n"
            "  \"b\": 0.578947\n"
            "}\n");
  EXPECT_EQ(text, canonical_json(j));
}

TEST(Manifest, StatsTableShape) {
  std::vector<CategoryScore> scores{{"a", 0.2608}, {"b", 0.7947}};
  const std::string table = stats_table(similarity_stats(scores, 10));
  EXPECT_NE(table.find("Mean Sim."), std::string::npos);
  EXPECT_NE(table.find("0.5277"), std::string::npos);  // mean to 4 decimals
}

}  // namespace
}  // namespace ovsnet
