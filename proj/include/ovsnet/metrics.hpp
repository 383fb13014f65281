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
#ifndef OVSNET_METRICS_HPP
#define OVSNET_METRICS_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ovsnet/embedding.hpp"
#include "ovsnet/errors.hpp"
#include "ovsnet/mask.hpp"
#include "ovsnet/random.hpp"

namespace ovsnet {

/// Per-class intersection / ground-truth / prediction pixel tallies.
/// Accumulators over disjoint image sets merge by elementwise addition, so
/// evaluation parallelizes map-reduce style.
struct ConfusionAccumulator {
  std::vector<std::int64_t> intersection;
  std::vector<std::int64_t> gt_pixels;
  std::vector<std::int64_t> pred_pixels;
  std::optional<std::size_t> others_class;

  explicit ConfusionAccumulator(
      std::size_t num_classes,
      std::optional<std::size_t> others = std::nullopt)
      : intersection(num_classes, 0),
        gt_pixels(num_classes, 0),
        pred_pixels(num_classes, 0),
        others_class(others) {
    if (num_classes == 0) {
      throw ConfigError("confusion accumulator needs at least one class");
    }
    if (others && *others >= num_classes) {
      throw ConfigError("others class id out of range");
    }
  }

  std::size_t num_classes() const { return intersection.size(); }

  std::int64_t union_count(std::size_t c) const {
    return gt_pixels[c] + pred_pixels[c] - intersection[c];
  }

  void merge(const ConfusionAccumulator& other) {
    if (other.num_classes() != num_classes() ||
        other.others_class != others_class) {
      throw DataError("confusion merge: incompatible accumulators");
    }
    for (std::size_t c = 0; c < num_classes(); ++c) {
      intersection[c] += other.intersection[c];
      gt_pixels[c] += other.gt_pixels[c];
      pred_pixels[c] += other.pred_pixels[c];
    }
  }
};

/// Adds one image pair to the tallies. Ground-truth ignore pixels contribute
/// nothing; predictions must not contain the ignore id.
inline void confusion_update(ConfusionAccumulator& acc, const SegMask& gt,
                             const SegMask& pred) {
  gt.validate();
  pred.validate();
  if (!gt.same_shape(pred)) {
    throw DataError("confusion_update: mask shapes differ (" +
                    std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                    " vs " + std::to_string(pred.width) + "x" +
                    std::to_string(pred.height) + ")");
  }
  const std::size_t k = acc.num_classes();
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const std::uint16_t p = pred.labels[i];
    if (p == SegMask::kIgnore) {
      throw DataError("confusion_update: prediction contains the ignore id");
    }
    const std::uint16_t g = gt.labels[i];
    if (g == SegMask::kIgnore) continue;
    if (g >= k) {
      throw DataError("confusion_update: ground-truth class id " +
                      std::to_string(g) + " outside vocabulary of size " +
                      std::to_string(k));
    }
    if (p >= k) {
      throw DataError("confusion_update: predicted class id " +
                      std::to_string(p) + " outside vocabulary of size " +
                      std::to_string(k));
    }
    ++acc.gt_pixels[g];
    ++acc.pred_pixels[p];
    if (g == p) ++acc.intersection[g];
  }
}

enum class MiouMode { kPresentClasses, kAllClasses };

struct ClassIou {
  std::size_t class_id = 0;
  std::int64_t intersection = 0;
  std::int64_t union_count = 0;
  std::int64_t gt_pixels = 0;
  std::int64_t pred_pixels = 0;
  double iou = 0.0;
  bool in_mean = false;
};

struct MiouResult {
  double miou = 0.0;
  std::vector<ClassIou> per_class;  // classes touched by gt or prediction
};

/// Mean of per-class intersection-over-union. kPresentClasses averages only
/// classes with ground-truth pixels; kAllClasses also counts classes that
/// were predicted but absent (IoU 0), leaving untouched classes out. The
/// "others" class can be excluded from the mean; its pixels still shape the
/// unions of every other class.
inline MiouResult miou(const ConfusionAccumulator& acc, MiouMode mode,
                       bool include_others = true) {
  MiouResult result;
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < acc.num_classes(); ++c) {
    const std::int64_t uni = acc.union_count(c);
    if (uni <= 0) continue;  // never touched
    ClassIou entry;
    entry.class_id = c;
    entry.intersection = acc.intersection[c];
    entry.union_count = uni;
    entry.gt_pixels = acc.gt_pixels[c];
    entry.pred_pixels = acc.pred_pixels[c];
    entry.iou = static_cast<double>(entry.intersection) /
                static_cast<double>(uni);
    const bool is_others = acc.others_class && *acc.others_class == c;
    const bool mode_ok =
        mode == MiouMode::kAllClasses || acc.gt_pixels[c] > 0;
    entry.in_mean = mode_ok && (include_others || !is_others);
    if (entry.in_mean) {
      sum += entry.iou;
      ++counted;
    }
    result.per_class.push_back(entry);
  }
  if (counted == 0) {
    throw DataError("miou: no classes with pixels in the selected mode");
  }
  result.miou = sum / static_cast<double>(counted);
  return result;
}

enum class TieBreak { kLowestIndex, kError };

/// Argmax of cosine similarity between a region embedding and every class
/// embedding. Exact score ties resolve to the lowest class index or raise.
inline std::size_t nearest_class_scorer(const Embedding& region,
                                        const EmbeddingSet& class_embeddings,
                                        TieBreak tie_break) {
  if (class_embeddings.count() < 1) {
    throw DataError("nearest_class_scorer: empty class set");
  }
  std::size_t best = 0;
  double best_score = -2.0;
  std::vector<std::size_t> tied;
  for (Eigen::Index c = 0; c < class_embeddings.count(); ++c) {
    const double score = cosine_similarity(
        region, class_embeddings.values.row(c).transpose());
    if (score > best_score) {
      best_score = score;
      best = static_cast<std::size_t>(c);
      tied.assign(1, best);
    } else if (score == best_score) {
      tied.push_back(static_cast<std::size_t>(c));
    }
  }
  if (tied.size() > 1 && tie_break == TieBreak::kError) {
    std::string ids;
    for (const std::size_t c : tied) {
      if (!ids.empty()) ids += ", ";
      ids += class_embeddings.labels
                 ? class_embeddings.label_at(static_cast<Eigen::Index>(c))
                 : std::to_string(c);
    }
    throw DataError("nearest_class_scorer: ambiguous argmax between classes {" +
                    ids + "}");
  }
  return best;
}

/// Evaluation unit for the class-count sweep: a ground-truth raster plus a
/// raster of region ids indexing an external region-embedding set.
struct SweepImage {
  SegMask gt;       // class ids, < number of base classes
  SegMask regions;  // rows of the region embedding set
};

struct SweepPoint {
  std::size_t num_categories = 0;  // base classes + injected distractors
  double miou = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::uint64_t seed = 0;
  std::string distractor_source;
};

/// Re-scores every region against the base vocabulary plus a growing seeded
/// prefix of shuffled distractor embeddings, recomputing mIoU at each step.
/// Distractor sets are nested across steps, so decline is structural rather
/// than a sampling accident.
inline SweepResult class_count_sweep(const std::vector<SweepImage>& images,
                                     const EmbeddingSet& region_embeddings,
                                     const EmbeddingSet& base_classes,
                                     const EmbeddingSet& distractors,
                                     const std::vector<int>& steps,
                                     std::uint64_t seed) {
  if (steps.empty()) throw ConfigError("class_count_sweep: empty step list");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] < 0 || (i > 0 && steps[i] <= steps[i - 1])) {
      throw ConfigError("class_count_sweep: steps must be strictly increasing "
                        "and non-negative");
    }
  }
  const int max_step = steps.back();
  if (static_cast<Eigen::Index>(max_step) > distractors.count()) {
    throw ConfigError("class_count_sweep: distractor pool of " +
                      std::to_string(distractors.count()) +
                      " cannot cover requested step " +
                      std::to_string(max_step));
  }
  if (base_classes.count() < 1) {
    throw DataError("class_count_sweep: empty base class set");
  }
  if (region_embeddings.dim() != base_classes.dim() ||
      (distractors.count() > 0 && distractors.dim() != base_classes.dim())) {
    throw DataError("class_count_sweep: embedding dimensions differ");
  }
  if (images.empty()) throw DataError("class_count_sweep: no images");

  const std::size_t num_base = static_cast<std::size_t>(base_classes.count());
  const std::size_t num_regions =
      static_cast<std::size_t>(region_embeddings.count());

  // Validate rasters and collect the region ids actually referenced.
  std::set<std::uint16_t> used_regions;
  for (const SweepImage& img : images) {
    img.gt.validate();
    img.regions.validate();
    if (!img.gt.same_shape(img.regions)) {
      throw DataError("class_count_sweep: gt and region rasters differ in "
                      "shape");
    }
    for (std::size_t i = 0; i < img.gt.labels.size(); ++i) {
      const std::uint16_t g = img.gt.labels[i];
      const std::uint16_t r = img.regions.labels[i];
      if (g != SegMask::kIgnore && g >= num_base) {
        throw DataError("class_count_sweep: gt class id " + std::to_string(g) +
                        " outside the base vocabulary");
      }
      if (r == SegMask::kIgnore) {
        if (g != SegMask::kIgnore) {
          throw DataError("class_count_sweep: region raster leaves a scored "
                          "pixel uncovered");
        }
        continue;
      }
      if (r >= num_regions) {
        throw DataError("class_count_sweep: region id " + std::to_string(r) +
                        " outside the embedding set");
      }
      used_regions.insert(r);
    }
  }

  Rng rng(seed);
  const std::vector<std::size_t> order =
      shuffled_indices(static_cast<std::size_t>(distractors.count()), rng);

  SweepResult result;
  result.seed = seed;
  result.distractor_source =
      "seeded shuffle prefix of " + std::to_string(distractors.count()) +
      "-row distractor pool";

  for (const int step : steps) {
    const std::size_t k = static_cast<std::size_t>(step);
    Matrix classes(num_base + k, base_classes.dim());
    classes.topRows(base_classes.count()) = base_classes.values;
    for (std::size_t i = 0; i < k; ++i) {
      classes.row(static_cast<Eigen::Index>(num_base + i)) =
          distractors.values.row(static_cast<Eigen::Index>(order[i]));
    }
    const EmbeddingSet class_set{std::move(classes)};

    // One classification per referenced region id per step.
    std::vector<std::uint16_t> assigned(num_regions, 0);
    for (const std::uint16_t r : used_regions) {
      assigned[r] = static_cast<std::uint16_t>(nearest_class_scorer(
          region_embeddings.values.row(r).transpose(), class_set,
          TieBreak::kLowestIndex));
    }

    ConfusionAccumulator acc(num_base + k);
    for (const SweepImage& img : images) {
      SegMask pred(img.gt.height, img.gt.width, 0);
      for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const std::uint16_t r = img.regions.labels[i];
        pred.labels[i] = (r == SegMask::kIgnore) ? 0 : assigned[r];
      }
      confusion_update(acc, img.gt, pred);
    }
    result.points.push_back(
        {num_base + k, miou(acc, MiouMode::kPresentClasses).miou});
  }
  return result;
}

}  // namespace ovsnet

#endif  // OVSNET_METRICS_HPP
