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

// Two-stage fine-tuning of the toy policy:
//   1. masked supervised fine-tuning on per-head targets (unannotated heads
//      carry no gradient), and
//   2. group-sampled policy optimization: K rollouts per scene, mean-reward
//      baseline, a gradient step on the best rollout only, and an exact KL
//      pull toward a frozen reference policy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "a2seek/actions.hpp"
#include "a2seek/policy.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/rng.hpp"
#include "a2seek/seekenv.hpp"

namespace a2seek {

/// Which heads of a target are supervised.
struct HeadMask {
  bool seek = true;
  bool seek_cell = true;
  bool class_code = true;
  bool answer_cell = true;
  bool length = true;

  bool any() const { return seek || seek_cell || class_code || answer_cell || length; }
  friend bool operator==(const HeadMask&, const HeadMask&) = default;
};

/// Supervision granularity of SFT targets.
enum class TargetStyle {
  AnswerOnly,      // class label only
  ChainOfThought,  // class plus free-form reasoning (length)
  GraphOfThought,  // full structure: seek decision and region, class, evidence, reasoning
};

inline std::string_view to_string(TargetStyle s) {
  switch (s) {
    case TargetStyle::AnswerOnly: return "answer";
    case TargetStyle::ChainOfThought: return "cot";
    case TargetStyle::GraphOfThought: return "got";
  }
  return "got";
}

inline std::optional<TargetStyle> parse_target_style(std::string_view s) {
  if (s == "answer") return TargetStyle::AnswerOnly;
  if (s == "cot") return TargetStyle::ChainOfThought;
  if (s == "got") return TargetStyle::GraphOfThought;
  return std::nullopt;
}

class SftExample {
 public:
  SftExample(SceneSpec scene, StructuredAction target, HeadMask mask)
      : scene_(std::move(scene)), target_(std::move(target)), mask_(mask) {
    if (!mask_.any()) throw std::invalid_argument("SftExample: at least one head must be supervised");
    if (!target_.consistent()) throw std::invalid_argument("SftExample: target seek_cell must be present iff seek");
  }

  const SceneSpec& scene() const { return scene_; }
  const StructuredAction& target() const { return target_; }
  const HeadMask& mask() const { return mask_; }

 private:
  SceneSpec scene_;
  StructuredAction target_;
  HeadMask mask_;
};

/// Target built from the reward-maximizing action. Fields a style does not
/// annotate are masked; without seek annotation the target sequence has no
/// seek, so later heads are conditioned on the coarse view only.
inline SftExample make_sft_example(const SceneSpec& scene, const GenParams& gen, const RewardConfig& cfg,
                                   TargetStyle style) {
  StructuredAction target = oracle_action(scene, gen, cfg);
  HeadMask mask;
  if (style != TargetStyle::GraphOfThought) {
    target.seek = false;
    target.seek_cell.reset();
    mask = HeadMask{false, false, true, false, style == TargetStyle::ChainOfThought};
  }
  return SftExample(scene, target, mask);
}

/// Masked negative log-likelihood of the target and its gradient.
inline std::pair<double, PolicyParams> sft_loss_and_grad(const PolicyParams& params, const SftExample& ex,
                                                         const GenParams& gen) {
  using namespace policy_detail;
  SceneFeatures f(ex.scene(), gen);
  PolicyDistribution dist(params, f, gen);
  const StructuredAction& a = ex.target();
  const HeadMask& m = ex.mask();
  LogProbParts lp = dist.parts(a);
  std::size_t ctx = SceneFeatures::context_of(a);
  PolicyParams g = params.zeros_like();
  double loss = 0;
  if (m.seek) {
    loss -= lp.seek;
    g.seek.add_row(0, -((a.seek ? 1.0 : 0.0) - dist.p_seek()), f.pre);
  }
  if (m.seek_cell && a.seek) {
    loss -= lp.seek_cell;
    add_softmax_score(g.seek_cell, dist.log_seek_cell(), static_cast<std::size_t>(*a.seek_cell), -1.0, f.pre);
  }
  const auto& psi = f.post[ctx];
  if (m.class_code) {
    loss -= lp.class_code;
    add_softmax_score(g.class_head, dist.log_class(ctx), static_cast<std::size_t>(dist.space().class_index(a.class_code)), -1.0, psi);
  }
  if (m.answer_cell) {
    loss -= lp.answer_cell;
    add_softmax_score(g.answer_cell, dist.log_answer(ctx), static_cast<std::size_t>(a.answer_cell), -1.0, psi);
  }
  if (m.length) {
    loss -= lp.length;
    add_softmax_score(g.length, dist.log_length(ctx), static_cast<std::size_t>(a.length), -1.0, psi);
  }
  return {loss, std::move(g)};
}

/// Exact KL(pi || pi_ref) on one scene and its gradient with respect to pi's
/// parameters: sum_y pi(y) (log pi(y) - log pi_ref(y)) grad log pi(y).
inline std::pair<double, PolicyParams> kl_divergence(const PolicyParams& params, const PolicyParams& ref,
                                                     const SceneFeatures& f, const GenParams& gen) {
  PolicyDistribution p(params, f, gen);
  PolicyDistribution q(ref, f, gen);
  std::vector<double> lp = p.all_log_probs();
  std::vector<double> lq = q.all_log_probs();
  std::vector<double> diff(lp.size());
  double value = 0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    diff[i] = lp[i] - lq[i];
    value += std::exp(lp[i]) * diff[i];
  }
  return {value, weighted_score_sum(params, f, p, diff)};
}

inline std::pair<double, PolicyParams> kl_divergence(const PolicyParams& params, const PolicyParams& ref,
                                                     const SceneSpec& scene, const GenParams& gen) {
  return kl_divergence(params, ref, SceneFeatures(scene, gen), gen);
}

struct GroupSample {
  std::vector<StructuredAction> candidates;
  std::vector<double> rewards;
  double baseline = 0;
  std::size_t best_index = 0;

  double advantage() const { return rewards[best_index] - baseline; }
};

/// Fills baseline (mean, summed in index order) and best index (first argmax).
inline GroupSample make_group(std::vector<StructuredAction> candidates, std::vector<double> rewards) {
  if (rewards.empty() || candidates.size() != rewards.size())
    throw std::invalid_argument("make_group: need one reward per candidate");
  GroupSample g;
  double sum = 0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    sum += rewards[k];
    if (rewards[k] > rewards[g.best_index]) g.best_index = k;
  }
  // Clamped so equal rewards give that value exactly (zero advantage).
  auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  g.baseline = std::clamp(sum / static_cast<double>(rewards.size()), *lo, *hi);
  g.candidates = std::move(candidates);
  g.rewards = std::move(rewards);
  return g;
}

/// K rollouts, each from its own stream split off `rng`, rendered and scored.
inline GroupSample sample_group(const PolicyDistribution& dist, const SceneSpec& scene, int group_size, Rng& rng,
                                const RewardConfig& cfg) {
  if (group_size < 2) throw std::invalid_argument("sample_group: group size must be >= 2");
  GroundTruth gt = ground_truth(scene);
  std::vector<StructuredAction> cands;
  std::vector<double> rewards;
  for (int k = 0; k < group_size; ++k) {
    Rng stream = rng.split(static_cast<std::uint64_t>(k));
    StructuredAction a = sample_action(dist, stream);
    rewards.push_back(total_reward(render_transcript(render_action(a, scene)), gt, cfg).total);
    cands.push_back(a);
  }
  return make_group(std::move(cands), std::move(rewards));
}

/// params + lr * (grad log pi(y*) * (R* - baseline) - beta * grad KL(pi || pi_ref)).
inline PolicyParams agrpo_update(const PolicyParams& params, const SceneFeatures& f, const GroupSample& group,
                                 const PolicyParams& ref, double kl_beta, double lr, const GenParams& gen) {
  PolicyParams next = params;
  double adv = group.advantage();
  if (adv != 0) {
    PolicyDistribution dist(params, f, gen);
    next.axpy(lr * adv, grad_log_prob(params, f, dist, group.candidates[group.best_index]));
  }
  if (kl_beta != 0) {
    auto [kl, kl_grad] = kl_divergence(params, ref, f, gen);
    (void)kl;
    next.axpy(-lr * kl_beta, kl_grad);
  }
  return next;
}

/// Linear warmup from 0 over floor(warmup_frac * total) steps (at least one
/// when warmup_frac > 0), then cosine decay to 0 at total_steps.
inline double lr_schedule(long step, long total_steps, double base_lr, double warmup_frac) {
  if (total_steps <= 0) throw std::invalid_argument("lr_schedule: total_steps must be positive");
  if (step < 0 || step > total_steps) throw std::out_of_range("lr_schedule: step outside [0, total_steps]");
  if (!(warmup_frac >= 0) || warmup_frac >= 1) throw std::invalid_argument("lr_schedule: warmup_frac must be in [0, 1)");
  long warmup = static_cast<long>(std::floor(warmup_frac * static_cast<double>(total_steps) + 1e-9));
  if (warmup_frac > 0) warmup = std::max(warmup, 1L);
  warmup = std::min(warmup, total_steps - 1);
  if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

enum class StageKind { Sft, Agrpo };

struct TrainConfig {
  StageKind stage = StageKind::Sft;
  int group_size = 8;
  double kl_beta = 0.05;
  double learning_rate = 0.05;  // toy scale; the large-model recipe used 1e-5
  long total_steps = 0;         // 0: epochs * train_scenes / scenes_per_step
  double warmup_frac = 0.05;
  std::uint64_t seed = 1;
  RewardConfig reward;
  int scenes_per_step = 1;
  int epochs = 0;               // 0: 4 for SFT, 1 for A-GRPO
  int train_scenes = 200;
  TargetStyle sft_targets = TargetStyle::GraphOfThought;
  double got_fraction = 1.0;    // share of SFT scenes with full-structure targets
  GenParams gen;

  int effective_epochs() const { return epochs > 0 ? epochs : (stage == StageKind::Sft ? 4 : 1); }

  long effective_steps() const {
    if (total_steps > 0) return total_steps;
    long n = static_cast<long>(effective_epochs()) * train_scenes;
    return stage == StageKind::Sft ? n : std::max(1L, n / scenes_per_step);
  }

  void check() const {
    if (group_size < 2) throw std::invalid_argument("TrainConfig: group_size must be >= 2");
    if (!(warmup_frac >= 0) || warmup_frac >= 1) throw std::invalid_argument("TrainConfig: warmup_frac must be in [0, 1)");
    if (!(kl_beta >= 0)) throw std::invalid_argument("TrainConfig: kl_beta must be >= 0");
    if (!(learning_rate >= 0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (scenes_per_step < 1) throw std::invalid_argument("TrainConfig: scenes_per_step must be >= 1");
    if (train_scenes < 1) throw std::invalid_argument("TrainConfig: train_scenes must be >= 1");
    if (!(got_fraction >= 0) || got_fraction > 1) throw std::invalid_argument("TrainConfig: got_fraction must be in [0, 1]");
    reward.check();
    gen.check();
  }
};

struct StepRecord {
  long step = 0;
  double lr = 0;
  std::optional<double> loss;         // SFT
  std::optional<double> mean_reward;  // A-GRPO group baseline
  std::optional<double> kl;
  std::optional<double> best_reward;
  std::optional<double> baseline;
};

struct TrainingLog {
  std::vector<StepRecord> steps;

  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : steps) {
      nlohmann::ordered_json j;
      j["step"] = r.step;
      j["lr"] = r.lr;
      if (r.loss) j["loss"] = *r.loss;
      if (r.mean_reward) j["mean_reward"] = *r.mean_reward;
      j["kl"] = r.kl ? nlohmann::ordered_json(*r.kl) : nlohmann::ordered_json(nullptr);
      if (r.best_reward) j["best_reward"] = *r.best_reward;
      if (r.baseline) j["baseline"] = *r.baseline;
      out += j.dump();
      out += '\n';
    }
    return out;
  }
};

struct StageResult {
  PolicyParams params;
  TrainingLog log;
};

// Stream indices under the master seed; run manifests record the derived values.
inline constexpr std::uint64_t kStreamSftScenes = 0x5F7;
inline constexpr std::uint64_t kStreamSftStyle = 0x6F7;
inline constexpr std::uint64_t kStreamSftOrder = 0x5F70;
inline constexpr std::uint64_t kStreamRlScenes = 0xA6290;
inline constexpr std::uint64_t kStreamRlOrder = 0xA6A0;
inline constexpr std::uint64_t kStreamRlRollouts = 0xA6A1;

/// Seeds of the scenes a stage trains on.
inline std::vector<std::uint64_t> training_scene_seeds(const TrainConfig& cfg) {
  std::uint64_t split = cfg.stage == StageKind::Sft ? kStreamSftScenes : kStreamRlScenes;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.train_scenes; ++i) seeds.push_back(derive_seed(derive_seed(cfg.seed, split), static_cast<std::uint64_t>(i)));
  return seeds;
}

namespace training_detail {

inline std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace training_detail

/// SFT targets for the stage's training scenes. A got_fraction share of the
/// scenes (chosen by seed) carries cfg.sft_targets; the rest are answer-only.
inline std::vector<SftExample> build_sft_examples(const TrainConfig& cfg) {
  std::vector<SftExample> out;
  Rng pick(derive_seed(cfg.seed, kStreamSftStyle));
  for (std::uint64_t s : training_scene_seeds(cfg)) {
    SceneSpec scene = generate_scene(s, cfg.gen);
    bool full = pick.uniform() < cfg.got_fraction;
    out.push_back(make_sft_example(scene, cfg.gen, cfg.reward, full ? cfg.sft_targets : TargetStyle::AnswerOnly));
  }
  return out;
}

inline StageResult run_sft(const TrainConfig& cfg, const std::vector<SftExample>& examples, PolicyParams init) {
  cfg.check();
  if (examples.empty()) throw std::invalid_argument("run_sft: no examples");
  init.check_shape(cfg.gen);
  StageResult res{std::move(init), {}};
  Rng rng(derive_seed(cfg.seed, kStreamSftOrder));
  const long total = cfg.total_steps > 0 ? cfg.total_steps : static_cast<long>(cfg.effective_epochs()) * static_cast<long>(examples.size());
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  for (long step = 0; step < total; ++step) {
    if (cursor == order.size()) {
      order = training_detail::shuffled(examples.size(), rng);
      cursor = 0;
    }
    const SftExample& ex = examples[order[cursor++]];
    double lr = lr_schedule(step, total, cfg.learning_rate, cfg.warmup_frac);
    auto [loss, grad] = sft_loss_and_grad(res.params, ex, cfg.gen);
    res.params.axpy(-lr, grad);
    StepRecord r;
    r.step = step;
    r.lr = lr;
    r.loss = loss;
    res.log.steps.push_back(r);
  }
  return res;
}

inline StageResult run_sft(const TrainConfig& cfg, std::optional<PolicyParams> init = std::nullopt) {
  return run_sft(cfg, build_sft_examples(cfg), init ? *init : PolicyParams::zeros(cfg.gen));
}

/// A-GRPO from `init` with KL toward the frozen `ref`.
inline StageResult run_agrpo(const TrainConfig& cfg, const PolicyParams& ref, std::optional<PolicyParams> init = std::nullopt) {
  cfg.check();
  ref.check_shape(cfg.gen);
  StageResult res{init ? *init : ref, {}};
  res.params.check_shape(cfg.gen);
  std::vector<SceneSpec> scenes;
  for (std::uint64_t s : training_scene_seeds(cfg)) scenes.push_back(generate_scene(s, cfg.gen));
  std::vector<SceneFeatures> feats;
  for (const auto& sc : scenes) feats.emplace_back(sc, cfg.gen);
  Rng order_rng(derive_seed(cfg.seed, kStreamRlOrder));
  const long total = cfg.effective_steps();
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  for (long step = 0; step < total; ++step) {
    double lr = lr_schedule(step, total, cfg.learning_rate, cfg.warmup_frac);
    Rng step_rng(derive_seed(derive_seed(cfg.seed, kStreamRlRollouts), static_cast<std::uint64_t>(step)));
    double sum_baseline = 0, sum_best = 0, sum_kl = 0;
    for (int j = 0; j < cfg.scenes_per_step; ++j) {
      if (cursor == order.size()) {
        order = training_detail::shuffled(scenes.size(), order_rng);
        cursor = 0;
      }
      std::size_t idx = order[cursor++];
      PolicyDistribution dist(res.params, feats[idx], cfg.gen);
      Rng group_rng = step_rng.split(static_cast<std::uint64_t>(j));
      GroupSample group = sample_group(dist, scenes[idx], cfg.group_size, group_rng, cfg.reward);
      double kl = kl_divergence(res.params, ref, feats[idx], cfg.gen).first;
      res.params = agrpo_update(res.params, feats[idx], group, ref, cfg.kl_beta, lr, cfg.gen);
      sum_baseline += group.baseline;
      sum_best += group.rewards[group.best_index];
      sum_kl += kl;
    }
    double n = cfg.scenes_per_step;
    StepRecord r;
    r.step = step;
    r.lr = lr;
    r.mean_reward = sum_baseline / n;
    r.kl = sum_kl / n;
    r.best_reward = sum_best / n;
    r.baseline = sum_baseline / n;
    res.log.steps.push_back(r);
  }
  return res;
}

}  // namespace a2seek
