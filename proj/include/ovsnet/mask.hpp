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
#ifndef OVSNET_MASK_HPP
#define OVSNET_MASK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ovsnet/errors.hpp"

namespace ovsnet {

/// Dense per-pixel class-id raster, row-major. Id 65535 is reserved for
/// pixels excluded from evaluation.
struct SegMask {
  static constexpr std::uint16_t kIgnore = 0xffff;

  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> labels;  // height * width entries, row-major

  SegMask() = default;
  SegMask(int h, int w, std::uint16_t fill = 0)
      : width(w),
        height(h),
        labels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w),
               fill) {}

  std::size_t pixel_count() const { return labels.size(); }

  std::uint16_t at(int y, int x) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint16_t& at(int y, int x) {
    return labels[static_cast<std::size_t>(y) * width + x];
  }

  bool same_shape(const SegMask& other) const {
    return width == other.width && height == other.height;
  }

  void validate() const {
    if (width < 1 || height < 1) {
      throw DataError("mask dimensions must be positive, got " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
    if (labels.size() !=
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw DataError("mask label buffer does not match dimensions");
    }
  }
};

}  // namespace ovsnet

#endif  // OVSNET_MASK_HPP
