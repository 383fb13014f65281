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
#ifndef OVSNET_EMBEDDING_HPP
#define OVSNET_EMBEDDING_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ovsnet/errors.hpp"
#include "ovsnet/mask.hpp"

namespace ovsnet {

using Embedding = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A labeled stack of row embeddings sharing one dimension. All arithmetic
/// runs in float64 regardless of how the values were stored on disk.
struct EmbeddingSet {
  Matrix values;  // one embedding per row, count x dim
  std::optional<std::vector<std::string>> labels;

  EmbeddingSet() = default;
  explicit EmbeddingSet(Matrix m) : values(std::move(m)) {}
  EmbeddingSet(Matrix m, std::vector<std::string> l)
      : values(std::move(m)), labels(std::move(l)) {}

  Eigen::Index count() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }

  const std::string& label_at(Eigen::Index i) const {
    if (!labels) throw DataError("embedding set has no labels");
    return (*labels)[static_cast<std::size_t>(i)];
  }

  void validate() const {
    if (!values.allFinite()) {
      throw DataError("embedding set contains non-finite values");
    }
    if (labels) {
      if (static_cast<Eigen::Index>(labels->size()) != count()) {
        throw DataError("label count " + std::to_string(labels->size()) +
                        " does not match row count " + std::to_string(count()));
      }
      std::unordered_set<std::string> seen;
      for (const auto& l : *labels) {
        if (!seen.insert(l).second) {
          throw DataError("duplicate label '" + l + "' in embedding set");
        }
      }
    }
  }
};

/// H x W x d feature grid; pixel (y, x) lives at row y*W + x.
struct FeatureMap {
  int height = 0;
  int width = 0;
  Matrix values;  // (height * width) x channels

  Eigen::Index channels() const { return values.cols(); }

  void validate() const {
    if (height < 1 || width < 1) {
      throw DataError("feature map dimensions must be positive");
    }
    if (values.rows() !=
        static_cast<Eigen::Index>(height) * static_cast<Eigen::Index>(width)) {
      throw DataError("feature map row count does not match dimensions");
    }
    if (!values.allFinite()) {
      throw DataError("feature map contains non-finite values");
    }
  }
};

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw DataError("cosine_similarity: dimension mismatch (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw DataError("cosine_similarity: zero-norm input");
  }
  const double c = a.dot(b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

inline Embedding l2_normalize(const Embedding& a) {
  const double n = a.norm();
  if (n == 0.0) throw DataError("l2_normalize: zero-norm input");
  return a / n;
}

/// Mean of the feature vectors under the selected pixels. A pixel is selected
/// when its mask value is neither 0 nor the ignore id.
inline Embedding mask_pool(const FeatureMap& features, const SegMask& mask) {
  features.validate();
  mask.validate();
  if (mask.width != features.width || mask.height != features.height) {
    throw DataError("mask_pool: mask " + std::to_string(mask.width) + "x" +
                    std::to_string(mask.height) + " does not match feature map " +
                    std::to_string(features.width) + "x" +
                    std::to_string(features.height));
  }
  Embedding sum = Embedding::Zero(features.channels());
  std::int64_t selected = 0;
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    const std::uint16_t v = mask.labels[i];
    if (v == 0 || v == SegMask::kIgnore) continue;
    sum += features.values.row(static_cast<Eigen::Index>(i));
    ++selected;
  }
  if (selected == 0) throw DataError("mask_pool: mask selects no pixels");
  return sum / static_cast<double>(selected);
}

}  // namespace ovsnet

#endif  // OVSNET_EMBEDDING_HPP
