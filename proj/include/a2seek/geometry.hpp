// Copyright 2026 The A2Seek Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace a2seek {

/// Axis-aligned rectangle in pixel coordinates. Zero-area boxes are valid.
struct BoundingBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  bool within(double frame_w, double frame_h) const {
    return valid() && x_min >= 0 && y_min >= 0 && x_max <= frame_w && y_max <= frame_h;
  }
  BoundingBox translated(double dx, double dy) const {
    return {x_min + dx, y_min + dy, x_max + dx, y_max + dy};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

/// Intersection over union; 0 when either box has zero area.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  double inter = intersection_area(a, b);
  double uni = a.area() + b.area() - inter;
  if (uni <= 0 || inter <= 0) return 0.0;
  return inter / uni;
}

struct BoxMatch {
  std::size_t pred_index;
  std::size_t gt_index;
  double iou;

  friend bool operator==(const BoxMatch&, const BoxMatch&) = default;
};

/// Greedy one-to-one matching in descending IoU order. Ties go to the lower
/// (pred_index, gt_index) pair; zero-IoU pairs are never matched.
inline std::vector<BoxMatch> match_boxes(const std::vector<BoundingBox>& preds,
                                         const std::vector<BoundingBox>& gts) {
  std::vector<BoxMatch> candidates;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      double v = iou(preds[p], gts[g]);
      if (v > 0) candidates.push_back({p, g, v});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const BoxMatch& a, const BoxMatch& b) { return a.iou > b.iou; });
  std::vector<bool> pred_used(preds.size(), false);
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<BoxMatch> out;
  for (const auto& c : candidates) {
    if (pred_used[c.pred_index] || gt_used[c.gt_index]) continue;
    pred_used[c.pred_index] = true;
    gt_used[c.gt_index] = true;
    out.push_back(c);
  }
  return out;
}

struct GridDims {
  int coarse = 4;  // G: cells per side
  int pixels = 16; // P: pixels per side
  int cell_pixels() const { return pixels / coarse; }
  int num_cells() const { return coarse * coarse; }
};

/// Pixel rectangle of a coarse cell, row-major.
inline BoundingBox cell_rect(int cell_index, GridDims dims) {
  if (dims.coarse <= 0 || dims.pixels % dims.coarse != 0)
    throw std::invalid_argument("cell_rect: coarse dim must divide pixel dim");
  if (cell_index < 0 || cell_index >= dims.num_cells())
    throw std::out_of_range("cell_rect: cell index " + std::to_string(cell_index) +
                            " outside [0, " + std::to_string(dims.num_cells()) + ")");
  int s = dims.cell_pixels();
  int row = cell_index / dims.coarse;
  int col = cell_index % dims.coarse;
  return {static_cast<double>(col * s), static_cast<double>(row * s),
          static_cast<double>((col + 1) * s), static_cast<double>((row + 1) * s)};
}

/// Cell whose rect contains the point; points on the far edge clamp inward.
inline int cell_of_point(double x, double y, GridDims dims) {
  int s = dims.cell_pixels();
  int col = std::clamp(static_cast<int>(x) / s, 0, dims.coarse - 1);
  int row = std::clamp(static_cast<int>(y) / s, 0, dims.coarse - 1);
  return row * dims.coarse + col;
}

/// Snaps an arbitrary region to the coarse cell containing its center.
inline int snap_to_cell(const BoundingBox& region, GridDims dims) {
  return cell_of_point((region.x_min + region.x_max) / 2, (region.y_min + region.y_max) / 2, dims);
}

}  // namespace a2seek
