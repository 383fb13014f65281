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
#ifndef OVSNET_BENCH_HPP
#define OVSNET_BENCH_HPP

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "ovsnet/embedding.hpp"
#include "ovsnet/errors.hpp"
#include "ovsnet/version.hpp"

namespace ovsnet {

// Benchmark construction: score every candidate category by its maximum
// cosine similarity to a training vocabulary, drop images whose *minimum*
// present-category score exceeds sigma1, and remap categories scoring above
// sigma2 to the catch-all "others" inside the surviving images.

inline constexpr const char* kOthersCategory = "others";

struct CategoryScore {
  std::string name;
  double max_train_similarity = 0.0;
};

struct InventoryRecord {
  std::string image_id;
  std::string mask_path;
  std::vector<std::string> categories;
};

enum class Decision { kKept, kFiltered, kDropped };

inline const char* decision_name(Decision d) {
  switch (d) {
    case Decision::kKept: return "kept";
    case Decision::kFiltered: return "filtered";
    case Decision::kDropped: return "dropped";
  }
  return "unknown";
}

struct ImageRecord {
  std::string image_id;
  std::string mask_path;
  std::vector<std::string> categories;  // after exclusions
  double image_similarity = 0.0;        // min over present category scores
  Decision decision = Decision::kKept;
  std::vector<std::string> remapped;  // categories sent to "others"
  std::string drop_reason;            // set only for kDropped
};

struct BenchManifest {
  std::string version;
  std::string train_vocab_hash;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  std::vector<ImageRecord> records;
  std::vector<std::string> final_categories;  // survivors plus "others"
  std::vector<std::string> category_index;    // raster id -> category name

  std::size_t kept_count() const {
    std::size_t n = 0;
    for (const auto& r : records) {
      if (r.decision == Decision::kKept) ++n;
    }
    return n;
  }
  bool empty_benchmark() const { return kept_count() == 0; }
};

struct SimilarityStats {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t class_count = 0;
  std::size_t image_count = 0;
};

/// Max cosine similarity of each candidate against the training vocabulary,
/// candidate order preserved.
inline std::vector<CategoryScore> score_categories(
    const EmbeddingSet& candidates, const EmbeddingSet& train_vocab) {
  candidates.validate();
  train_vocab.validate();
  if (!candidates.labels || !train_vocab.labels) {
    throw DataError("score_categories: both vocabularies must carry labels");
  }
  if (train_vocab.count() < 1) {
    throw DataError("score_categories: empty training vocabulary");
  }
  if (candidates.count() > 0 && candidates.dim() != train_vocab.dim()) {
    throw DataError("score_categories: embedding dimensions differ");
  }
  std::vector<CategoryScore> scores;
  scores.reserve(static_cast<std::size_t>(candidates.count()));
  for (Eigen::Index i = 0; i < candidates.count(); ++i) {
    double best = -1.0;
    for (Eigen::Index j = 0; j < train_vocab.count(); ++j) {
      best = std::max(best, cosine_similarity(
                                candidates.values.row(i).transpose(),
                                train_vocab.values.row(j).transpose()));
    }
    scores.push_back({candidates.label_at(i), best});
  }
  return scores;
}

/// Minimum of the present categories' scores; the image is only as novel as
/// its most familiar category.
inline double image_similarity(const std::vector<std::string>& categories,
                               const std::vector<CategoryScore>& scores) {
  if (categories.empty()) {
    throw DataError("image_similarity: image lists no categories");
  }
  std::unordered_map<std::string, double> by_name;
  for (const auto& s : scores) by_name.emplace(s.name, s.max_train_similarity);
  double lowest = 2.0;
  for (const auto& c : categories) {
    const auto it = by_name.find(c);
    if (it == by_name.end()) {
      throw DataError("image_similarity: category '" + c + "' has no score");
    }
    lowest = std::min(lowest, it->second);
  }
  return lowest;
}

struct BuildOptions {
  std::vector<std::string> exclude;  // categories removed before the rules run
  std::string train_vocab_hash;
  std::string version = std::string(kFormatVersion);
};

/// Applies the sigma1 filter and sigma2 remap to an image inventory and
/// assembles the manifest. Images left with nothing but "others" (or with
/// every category excluded) are dropped with a recorded reason.
inline BenchManifest filter_and_remap(const std::vector<InventoryRecord>& records,
                                      const std::vector<CategoryScore>& scores,
                                      double sigma1, double sigma2,
                                      const BuildOptions& options = {}) {
  if (sigma2 > sigma1) {
    throw ConfigError("filter_and_remap: sigma2 (" + std::to_string(sigma2) +
                      ") must not exceed sigma1 (" + std::to_string(sigma1) +
                      ")");
  }
  std::unordered_map<std::string, double> score_by_name;
  for (const auto& s : scores) {
    score_by_name.emplace(s.name, s.max_train_similarity);
  }
  const std::unordered_set<std::string> excluded(options.exclude.begin(),
                                                 options.exclude.end());

  BenchManifest manifest;
  manifest.version = options.version;
  manifest.train_vocab_hash = options.train_vocab_hash;
  manifest.sigma1 = sigma1;
  manifest.sigma2 = sigma2;
  for (const auto& s : scores) manifest.category_index.push_back(s.name);

  std::set<std::string> survivors;
  for (const auto& inv : records) {
    ImageRecord rec;
    rec.image_id = inv.image_id;
    rec.mask_path = inv.mask_path;
    for (const auto& c : inv.categories) {
      if (!excluded.count(c)) rec.categories.push_back(c);
    }
    if (rec.categories.empty()) {
      rec.decision = Decision::kDropped;
      rec.drop_reason = "all categories excluded";
      rec.image_similarity = image_similarity(inv.categories, scores);
      manifest.records.push_back(std::move(rec));
      continue;
    }
    rec.image_similarity = image_similarity(rec.categories, scores);
    if (rec.image_similarity > sigma1) {
      rec.decision = Decision::kFiltered;
      manifest.records.push_back(std::move(rec));
      continue;
    }
    for (const auto& c : rec.categories) {
      if (score_by_name.at(c) > sigma2) rec.remapped.push_back(c);
    }
    if (rec.remapped.size() == rec.categories.size()) {
      rec.decision = Decision::kDropped;
      rec.drop_reason = "all categories remapped to others";
      manifest.records.push_back(std::move(rec));
      continue;
    }
    rec.decision = Decision::kKept;
    const std::unordered_set<std::string> remapped(rec.remapped.begin(),
                                                   rec.remapped.end());
    for (const auto& c : rec.categories) {
      if (!remapped.count(c)) survivors.insert(c);
    }
    manifest.records.push_back(std::move(rec));
  }
  manifest.final_categories.assign(survivors.begin(), survivors.end());
  manifest.final_categories.push_back(kOthersCategory);
  return manifest;
}

/// Mean / median / min / max over category scores. The median of an even
/// count is the midpoint of the two central values.
inline SimilarityStats similarity_stats(const std::vector<CategoryScore>& scores,
                                        std::size_t image_count = 0) {
  if (scores.empty()) {
    throw DataError("similarity_stats: empty score list");
  }
  std::vector<double> values;
  values.reserve(scores.size());
  double sum = 0.0;
  for (const auto& s : scores) {
    values.push_back(s.max_train_similarity);
    sum += s.max_train_similarity;
  }
  std::sort(values.begin(), values.end());
  SimilarityStats stats;
  stats.class_count = scores.size();
  stats.image_count = image_count;
  stats.mean = sum / static_cast<double>(values.size());
  stats.min = values.front();
  stats.max = values.back();
  const std::size_t n = values.size();
  stats.median = (n % 2 == 1)
                     ? values[n / 2]
                     : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return stats;
}

inline nlohmann::json stats_to_json(const SimilarityStats& stats) {
  return nlohmann::json{{"class_count", stats.class_count},
                        {"image_count", stats.image_count},
                        {"mean", stats.mean},
                        {"median", stats.median},
                        {"min", stats.min},
                        {"max", stats.max}};
}

/// Aligned text rendering of the similarity statistics, one header line and
/// one value line (classes, images, mean, median, min, max).
inline std::string stats_table(const SimilarityStats& stats) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%8s %8s %10s %12s %10s %10s\n%8zu %8zu %10.4f %12.4f %10.4f "
                "%10.4f\n",
                "Classes", "Images", "Mean Sim.", "Median Sim.", "Min Sim.",
                "Max Sim.", stats.class_count, stats.image_count, stats.mean,
                stats.median, stats.min, stats.max);
  return buf;
}

inline nlohmann::json manifest_to_json(const BenchManifest& manifest) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : manifest.records) {
    nlohmann::json rec{{"image_id", r.image_id},
                       {"mask_path", r.mask_path},
                       {"categories", r.categories},
                       {"image_similarity", r.image_similarity},
                       {"decision", decision_name(r.decision)},
                       {"remapped", r.remapped}};
    if (r.decision == Decision::kDropped) rec["drop_reason"] = r.drop_reason;
    records.push_back(std::move(rec));
  }
  return nlohmann::json{{"version", manifest.version},
                        {"train_vocab_hash", manifest.train_vocab_hash},
                        {"sigma1", manifest.sigma1},
                        {"sigma2", manifest.sigma2},
                        {"records", std::move(records)},
                        {"final_categories", manifest.final_categories},
                        {"category_index", manifest.category_index}};
}

inline BenchManifest manifest_from_json(const nlohmann::json& j) {
  BenchManifest manifest;
  try {
    manifest.version = j.at("version").get<std::string>();
    manifest.train_vocab_hash = j.at("train_vocab_hash").get<std::string>();
    manifest.sigma1 = j.at("sigma1").get<double>();
    manifest.sigma2 = j.at("sigma2").get<double>();
    manifest.final_categories =
        j.at("final_categories").get<std::vector<std::string>>();
    manifest.category_index =
        j.at("category_index").get<std::vector<std::string>>();
    for (const auto& rec : j.at("records")) {
      ImageRecord r;
      r.image_id = rec.at("image_id").get<std::string>();
      r.mask_path = rec.at("mask_path").get<std::string>();
      r.categories = rec.at("categories").get<std::vector<std::string>>();
      r.image_similarity = rec.at("image_similarity").get<double>();
      r.remapped = rec.at("remapped").get<std::vector<std::string>>();
      const std::string d = rec.at("decision").get<std::string>();
      if (d == "kept") {
        r.decision = Decision::kKept;
      } else if (d == "filtered") {
        r.decision = Decision::kFiltered;
      } else if (d == "dropped") {
        r.decision = Decision::kDropped;
        r.drop_reason = rec.value("drop_reason", "");
      } else {
        throw DataError("manifest: unknown decision '" + d + "'");
      }
      manifest.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: malformed JSON: ") + e.what());
  }
  return manifest;
}

}  // namespace ovsnet

#endif  // OVSNET_BENCH_HPP
