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

// Rule-based rewards for one transcript against ground truth: format,
// accuracy, localization, seeking and length, plus their weighted total.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "a2seek/codes.hpp"
#include "a2seek/geometry.hpp"
#include "a2seek/got_format.hpp"

namespace a2seek {

struct FrameDims {
  double width = 16;
  double height = 16;
  double area() const { return width * height; }
  friend bool operator==(const FrameDims&, const FrameDims&) = default;
};

struct GroundTruth {
  ActionCode class_code = ActionCode::E00;
  std::vector<BoundingBox> boxes;
  bool seek_required = false;
  std::optional<BoundingBox> seek_region;  // present iff seek_required
  FrameDims frame_dims;

  bool consistent() const { return seek_required == seek_region.has_value(); }
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct RewardWeights {
  double format = 1.0;
  double accuracy = 1.0;
  double localization = 1.0;
  double seeking = 1.0;
  double length = 1.0;
};

struct RewardConfig {
  RewardWeights weights;
  double partial_credit = 0.1;
  int l_max = 64;            // longest think the toy policy can emit
  bool length_clamp = true;
  double seek_scale_beta = 1.0;  // scale of the information-based seek diagnostic only

  void check() const {
    if (l_max < 1) throw std::invalid_argument("RewardConfig: l_max must be >= 1");
    for (double w : {weights.format, weights.accuracy, weights.localization, weights.seeking, weights.length})
      if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("RewardConfig: weights must be finite and >= 0");
    if (!(partial_credit >= 0) || partial_credit > 1)
      throw std::invalid_argument("RewardConfig: partial_credit must be in [0, 1]");
  }
};

struct RewardBreakdown {
  double format = 0;
  double accuracy = 0;
  double localization = 0;
  double seeking = 0;
  double length = 0;
  double total = 0;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

inline double format_reward(std::string_view text) { return validate_format(text) ? 1.0 : 0.0; }

inline double accuracy_reward(std::optional<ActionCode> pred, ActionCode gt, const RewardConfig& cfg = {}) {
  if (!pred) return 0.0;
  if (*pred == gt) return 1.0;
  if (is_abnormal(*pred) && is_abnormal(gt)) return cfg.partial_credit;
  return 0.0;
}

/// Mean over gt boxes of the greedy-matched IoU (unmatched gt scores 0). With
/// no gt boxes the reward is 1 only for an empty prediction.
inline double localization_reward(const std::vector<BoundingBox>& pred_boxes,
                                  const std::vector<BoundingBox>& gt_boxes) {
  if (gt_boxes.empty()) return pred_boxes.empty() ? 1.0 : 0.0;
  double sum = 0;
  for (const auto& m : match_boxes(pred_boxes, gt_boxes)) sum += m.iou;
  return sum / static_cast<double>(gt_boxes.size());
}

/// Decision indicator times region IoU; a matched "no seek" scores 1.
inline double seeking_reward(bool pred_seek, const std::optional<BoundingBox>& pred_region, const GroundTruth& gt) {
  if (pred_seek != gt.seek_required) return 0.0;
  if (!pred_seek) return 1.0;
  if (!pred_region || !gt.seek_region) return 0.0;
  return iou(*pred_region, *gt.seek_region);
}

inline double length_reward(bool answer_correct, std::size_t think_tokens, const RewardConfig& cfg, bool format_ok) {
  if (!format_ok) return 0.0;
  double len = static_cast<double>(think_tokens);
  if (answer_correct) {
    if (think_tokens == 0) return 1.0;
    double r = 1.0 / std::log1p(len);
    return cfg.length_clamp ? std::min(1.0, r) : r;
  }
  return std::min(len / static_cast<double>(cfg.l_max), 1.0);
}

inline double weighted_total(const RewardBreakdown& b, const RewardWeights& w) {
  return w.format * b.format + w.accuracy * b.accuracy + w.localization * b.localization +
         w.seeking * b.seeking + w.length * b.length;
}

/// Scores an already parsed transcript. `format_ok` is whether it satisfies
/// the template (think and answer present).
inline RewardBreakdown score_transcript(const GotTranscript& t, const GroundTruth& gt, const RewardConfig& cfg) {
  RewardBreakdown b;
  bool format_ok = t.answer.has_value();
  b.format = format_ok ? 1.0 : 0.0;

  std::optional<ActionCode> pred_class;
  if (t.answer) pred_class = t.answer->class_code;
  b.accuracy = accuracy_reward(pred_class, gt.class_code, cfg);

  // An omitted answer or a <NULL> evidence list is no prediction at all.
  if (t.answer && t.answer->evidence_boxes) b.localization = localization_reward(*t.answer->evidence_boxes, gt.boxes);

  std::optional<BoundingBox> region;
  if (t.seek) region = t.seek->region;
  b.seeking = seeking_reward(t.seek.has_value(), region, gt);

  bool correct = pred_class.has_value() && *pred_class == gt.class_code;
  b.length = length_reward(correct, think_token_count(t), cfg, format_ok);
  b.total = weighted_total(b, cfg.weights);
  return b;
}

/// Unparseable text scores zero on every component.
inline RewardBreakdown total_reward(std::string_view text, const GroundTruth& gt, const RewardConfig& cfg = {}) {
  GotTranscript t;
  try {
    t = parse_transcript(text);
  } catch (const ParseError&) {
    return {};
  }
  return score_transcript(t, gt, cfg);
}

}  // namespace a2seek
