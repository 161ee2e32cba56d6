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

// Held-out evaluation of trained policies and the ablation drivers built on
// the two training stages.

#include <algorithm>
#include <cstdint>
#include <string>
#include <optional>
#include <vector>

#include "a2seek/actions.hpp"
#include "a2seek/eval.hpp"
#include "a2seek/policy.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/seekenv.hpp"
#include "a2seek/training.hpp"

namespace a2seek {

/// Scene distribution dominated by the ambiguous pair.
inline GenParams ambiguous_heavy(GenParams gen) {
  std::vector<double> prior(gen.classes.size(), 0.0);
  double rest = 0.3 / static_cast<double>(gen.classes.size() - 2);
  for (std::size_t i = 0; i < gen.classes.size(); ++i)
    prior[i] = gen.is_ambiguous(gen.classes[i]) ? 0.35 : rest;
  gen.class_prior = prior;
  return gen;
}

/// Seeds of a held-out split; disjoint streams from the training splits.
inline std::vector<std::uint64_t> heldout_seeds(std::uint64_t seed, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(derive_seed(derive_seed(seed, 0xE7A1ULL), static_cast<std::uint64_t>(i)));
  return out;
}

struct PolicyScore {
  double accuracy = 0;   // greedy class == gt class
  double mean_iou = 0;   // over scenes with gt boxes
  double seek_rate = 0;
  int n = 0;
};

inline PolicyScore score_policy(const PolicyParams& params, const std::vector<SceneSpec>& scenes, const GenParams& gen) {
  PolicyScore s;
  int boxed = 0;
  for (const auto& scene : scenes) {
    SceneFeatures f(scene, gen);
    PolicyDistribution dist(params, f, gen);
    StructuredAction a = greedy_action(dist);
    GroundTruth gt = ground_truth(scene);
    GotTranscript t = render_action(a, scene);
    if (a.class_code == scene.class_code) s.accuracy += 1;
    if (a.seek) s.seek_rate += 1;
    if (!gt.boxes.empty()) {
      ++boxed;
      std::vector<BoundingBox> pred;
      if (t.answer && t.answer->evidence_boxes) pred = *t.answer->evidence_boxes;
      s.mean_iou += localization_reward(pred, gt.boxes);
    }
  }
  s.n = static_cast<int>(scenes.size());
  if (s.n > 0) {
    s.accuracy /= s.n;
    s.seek_rate /= s.n;
  }
  if (boxed > 0) s.mean_iou /= boxed;
  return s;
}

inline std::vector<SceneSpec> make_scenes(const std::vector<std::uint64_t>& seeds, const GenParams& gen) {
  std::vector<SceneSpec> out;
  out.reserve(seeds.size());
  for (auto s : seeds) out.push_back(generate_scene(s, gen));
  return out;
}

/// Mean exact expected reward of a policy over a scene set.
inline double mean_expected_reward(const PolicyParams& params, const std::vector<SceneSpec>& scenes,
                                   const std::vector<RewardTable>& tables, const GenParams& gen) {
  double sum = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    PolicyDistribution dist(params, SceneFeatures(scenes[i], gen), gen);
    sum += exact_expected_reward(dist, tables[i]);
  }
  return scenes.empty() ? 0.0 : sum / static_cast<double>(scenes.size());
}

/// Scene code attached to a synthetic scene.
inline SceneCode synthetic_scene_code(const SceneSpec& scene) { return static_cast<SceneCode>(scene.seed % kNumSceneCodes); }

/// Greedy prediction of `params` on a scene as an evaluation record. The
/// reference text is the think text of the reward-maximizing action.
inline EvalRecord policy_record(const PolicyParams& params, const SceneSpec& scene, const GenParams& gen,
                                const RewardConfig& cfg) {
  SceneFeatures f(scene, gen);
  PolicyDistribution dist(params, f, gen);
  StructuredAction a = greedy_action(dist);
  GotTranscript t = render_action(a, scene);
  EvalRecord r;
  r.scene_code = synthetic_scene_code(scene);
  r.gt = ground_truth(scene);
  r.pred_class = a.class_code;
  r.pred_confidence = std::clamp(class_probability(dist, a), 0.0, 1.0);
  if (t.answer && t.answer->evidence_boxes) r.pred_boxes = *t.answer->evidence_boxes;
  r.pred_text = think_plain_text(t);
  r.ref_texts = {think_plain_text(render_action(oracle_action(scene, gen, cfg), scene))};
  return r;
}

// ---- ablation drivers ----

/// Short full-structure SFT: enough to teach the output structure, with
/// seeking left for the second stage to sharpen.
inline TrainConfig ablation_sft_config(std::uint64_t seed) {
  TrainConfig c;
  c.stage = StageKind::Sft;
  c.seed = seed;
  c.train_scenes = 40;
  c.learning_rate = 0.5;
  c.sft_targets = TargetStyle::GraphOfThought;
  return c;
}

inline TrainConfig ablation_rl_config(std::uint64_t seed) {
  TrainConfig c;
  c.stage = StageKind::Agrpo;
  c.seed = seed;
  c.train_scenes = 3000;
  c.learning_rate = 0.1;
  return c;
}

struct SeekAblation {
  PolicyScore with_seek_reward;
  PolicyScore without_seek_reward;
};

/// Same SFT checkpoint and seed; the only difference is the seeking weight.
inline SeekAblation seek_reward_ablation(std::uint64_t seed, const std::vector<SceneSpec>& eval_scenes, const GenParams& gen = {}) {
  TrainConfig sft = ablation_sft_config(seed);
  sft.gen = gen;
  PolicyParams ref = run_sft(sft).params;
  TrainConfig rl = ablation_rl_config(seed);
  rl.gen = gen;
  SeekAblation out;
  out.with_seek_reward = score_policy(run_agrpo(rl, ref).params, eval_scenes, gen);
  rl.reward.weights.seeking = 0;
  out.without_seek_reward = score_policy(run_agrpo(rl, ref).params, eval_scenes, gen);
  return out;
}

inline PolicyScore sft_style_score(std::uint64_t seed, TargetStyle style, const std::vector<SceneSpec>& eval_scenes,
                                   const GenParams& gen = {}) {
  TrainConfig sft = ablation_sft_config(seed);
  sft.gen = gen;
  sft.sft_targets = style;
  return score_policy(run_sft(sft).params, eval_scenes, gen);
}

}  // namespace a2seek
