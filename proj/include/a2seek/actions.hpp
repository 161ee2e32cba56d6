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

// The factorized action a toy policy takes in a scene, its enumeration, and
// its rendering into a structured transcript.

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2seek/got_format.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/seekenv.hpp"

namespace a2seek {

enum class LengthBucket { Short = 0, Medium = 1, Long = 2 };

inline constexpr int kNumLengthBuckets = 3;
inline constexpr std::array<int, kNumLengthBuckets> kBucketTokens = {4, 16, 64};

inline int bucket_tokens(LengthBucket b) { return kBucketTokens[static_cast<std::size_t>(b)]; }

struct StructuredAction {
  bool seek = false;
  std::optional<int> seek_cell;  // present iff seek
  ActionCode class_code = ActionCode::E00;
  int answer_cell = 0;
  LengthBucket length = LengthBucket::Short;

  bool consistent() const { return seek == seek_cell.has_value(); }
  friend bool operator==(const StructuredAction&, const StructuredAction&) = default;
};

/// Dense indexing of all actions for a parameter set:
///   index = ((slot * C + class) * cells + answer_cell) * 3 + length
/// where slot 0 is "no seek" and slot 1 + k seeks cell k.
class ActionSpace {
 public:
  explicit ActionSpace(const GenParams& params)
      : classes_(params.classes), cells_(params.num_cells()) {}

  int num_cells() const { return cells_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  int num_slots() const { return cells_ + 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(num_slots()) * static_cast<std::size_t>(num_classes()) *
           static_cast<std::size_t>(cells_) * kNumLengthBuckets;
  }

  ActionCode class_at(std::size_t i) const { return classes_.at(i); }

  int class_index(ActionCode code) const {
    for (int i = 0; i < num_classes(); ++i)
      if (classes_[static_cast<std::size_t>(i)] == code) return i;
    return -1;
  }

  std::size_t index_of(const StructuredAction& a) const {
    if (!a.consistent()) throw std::invalid_argument("ActionSpace: seek_cell must be present iff seek");
    int slot = a.seek ? 1 + *a.seek_cell : 0;
    int ci = class_index(a.class_code);
    if (ci < 0 || slot < 0 || slot >= num_slots() || a.answer_cell < 0 || a.answer_cell >= cells_)
      throw std::out_of_range("ActionSpace: action outside the space");
    return ((static_cast<std::size_t>(slot) * static_cast<std::size_t>(num_classes()) + static_cast<std::size_t>(ci)) *
                static_cast<std::size_t>(cells_) +
            static_cast<std::size_t>(a.answer_cell)) *
               kNumLengthBuckets +
           static_cast<std::size_t>(a.length);
  }

  StructuredAction at(std::size_t index) const {
    if (index >= size()) throw std::out_of_range("ActionSpace: index out of range");
    StructuredAction a;
    a.length = static_cast<LengthBucket>(index % kNumLengthBuckets);
    index /= kNumLengthBuckets;
    a.answer_cell = static_cast<int>(index % static_cast<std::size_t>(cells_));
    index /= static_cast<std::size_t>(cells_);
    a.class_code = classes_[index % classes_.size()];
    int slot = static_cast<int>(index / classes_.size());
    a.seek = slot > 0;
    if (a.seek) a.seek_cell = slot - 1;
    return a;
  }

 private:
  std::vector<ActionCode> classes_;
  int cells_;
};

namespace action_detail {

struct PhraseSet {
  const char* trigger;
  const char* diagnose;
  const char* reasoning;
  const char* reflection;
};

inline PhraseSet phrases(ActionCode code) {
  switch (code) {
    case ActionCode::E00: return {"scene looks calm", "no unusual motion", "people move normally", "nothing stands out"};
    case ActionCode::E01: return {"person stays put", "lingering near spot", "no clear purpose", "presence looks prolonged"};
    case ActionCode::E03: return {"fast moving figure", "rapid running gait", "speed exceeds walking", "motion looks hurried"};
    case ActionCode::E06: return {"figure drops down", "body hits ground", "balance was lost", "posture looks collapsed"};
    case ActionCode::E18: return {"two people close", "arms swing violently", "contact looks aggressive", "struggle appears mutual"};
    default: return {"unusual activity seen", "pattern needs checking", "behaviour breaks routine", "event seems abnormal"};
  }
}

inline void push_words(std::vector<std::pair<Stage, std::string>>& out, Stage stage, const std::string& text) {
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = text.find(' ', i);
    if (j == std::string::npos) j = text.size();
    if (j > i) out.push_back({stage, text.substr(i, j - i)});
    i = j + 1;
  }
}

}  // namespace action_detail

/// Fixed template: a per-class phrase stream (with a Seeking span when the
/// action seeks), padded with filler and cut to the bucket's token count.
/// The evidence box is the answer cell's rect; Normal answers carry none.
inline GotTranscript render_action(const StructuredAction& action, const GridDims& grid) {
  if (!action.consistent()) throw std::invalid_argument("render_action: seek_cell must be present iff seek");
  auto ph = action_detail::phrases(action.class_code);
  std::vector<std::pair<Stage, std::string>> words;
  action_detail::push_words(words, Stage::Trigger, ph.trigger);
  if (action.seek) action_detail::push_words(words, Stage::Seeking, "inspect cell " + std::to_string(*action.seek_cell));
  action_detail::push_words(words, Stage::Diagnose, ph.diagnose);
  action_detail::push_words(words, Stage::Reasoning, ph.reasoning);
  action_detail::push_words(words, Stage::Reflection, ph.reflection);
  const std::size_t target = static_cast<std::size_t>(bucket_tokens(action.length));
  for (std::size_t k = 1; words.size() < target; ++k) words.push_back({Stage::Reasoning, "detail" + std::to_string(k)});
  words.resize(target);

  GotTranscript t;
  for (const auto& [stage, word] : words) {
    if (!t.think.empty() && t.think.back().stage == stage) {
      t.think.back().text += ' ';
      t.think.back().text += word;
    } else {
      t.think.push_back({stage, word});
    }
  }
  if (action.seek) t.seek = SeekRequest{cell_rect(*action.seek_cell, grid)};
  AnswerBlock ans;
  ans.class_code = action.class_code;
  ans.evidence_boxes = std::vector<BoundingBox>{};
  if (is_abnormal(action.class_code)) ans.evidence_boxes->push_back(cell_rect(action.answer_cell, grid));
  t.answer = ans;
  return t;
}

/// As above, except that seeking the answer cell lets the evidence box shrink
/// to what the crop shows.
inline GotTranscript render_action(const StructuredAction& action, const SceneSpec& scene) {
  GotTranscript t = render_action(action, scene.grid());
  if (action.seek && *action.seek_cell == action.answer_cell && is_abnormal(action.class_code)) {
    if (auto box = detect_in_cell(scene, action.answer_cell)) t.answer->evidence_boxes = std::vector<BoundingBox>{*box};
  }
  return t;
}

/// Reward of every action in a scene, computed through the full text path
/// (render, then score the rendered text).
class RewardTable {
 public:
  RewardTable(const SceneSpec& scene, const GenParams& params, const RewardConfig& cfg)
      : space_(params), totals_(space_.size()), cls_(space_.size()) {
    GroundTruth gt = ground_truth(scene);
    for (std::size_t i = 0; i < space_.size(); ++i) {
      RewardBreakdown b = total_reward(render_transcript(render_action(space_.at(i), scene)), gt, cfg);
      totals_[i] = b.total;
      cls_[i] = b.accuracy;
    }
  }

  const ActionSpace& space() const { return space_; }
  double total(std::size_t index) const { return totals_[index]; }
  double accuracy(std::size_t index) const { return cls_[index]; }
  const std::vector<double>& totals() const { return totals_; }

 private:
  ActionSpace space_;
  std::vector<double> totals_;
  std::vector<double> cls_;
};

/// Reward-maximizing action over the whole space; ties go to the lowest index.
inline StructuredAction oracle_action(const SceneSpec& scene, const GenParams& params, const RewardConfig& cfg = {}) {
  RewardTable table(scene, params, cfg);
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.space().size(); ++i)
    if (table.total(i) > table.total(best)) best = i;
  return table.space().at(best);
}

}  // namespace a2seek
