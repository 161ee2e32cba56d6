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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "a2seek/policy.hpp"
#include "oracles.hpp"

namespace a2seek {
namespace {

using oracle::random_params;

TEST(LogProb, ZeroWeights) {
  GenParams gen;
  auto p = PolicyParams::zeros(gen);
  auto sc = generate_scene(2, gen);
  StructuredAction a{false, std::nullopt, ActionCode::E18, 3, LengthBucket::Medium};
  EXPECT_NEAR(log_prob(p, sc, a, gen), -std::log(480.0), 1e-12);
  a.seek = true;
  a.seek_cell = 4;
  EXPECT_NEAR(log_prob(p, sc, a, gen), -std::log(480.0 * 16), 1e-12);
}

TEST(LogProb, Normalized) {
  GenParams gen;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto p = random_params(gen, s, 1.0);
    auto sc = generate_scene(s, gen);
    SceneFeatures f(sc, gen);
    PolicyDistribution d(p, f, gen);
    double z = 0;
    for (double v : d.all_probs()) z += v;
    EXPECT_NEAR(z, 1.0, 1e-9);
    // all_log_probs agrees with the per-action path.
    auto all = d.all_log_probs();
    for (std::size_t i = 0; i < all.size(); i += 97) EXPECT_NEAR(all[i], d.log_prob(d.space().at(i)), 1e-12);
  }
}

TEST(LogProb, SaturatedHead) {
  GenParams gen;
  auto p = PolicyParams::zeros(gen);
  p.class_head.at(2, 0) = 1e6;  // bias feature is always 1
  auto sc = generate_scene(4, gen);
  SceneFeatures f(sc, gen);
  PolicyDistribution d(p, f, gen);
  StructuredAction a{false, std::nullopt, gen.classes[2], 0, LengthBucket::Short};
  EXPECT_NEAR(d.parts(a).class_code, 0.0, 1e-12);
  auto g = grad_log_prob(p, f, d, a);
  for (double v : g.class_head.data) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(LogProb, ShapeMismatch) {
  GenParams gen;
  auto p = PolicyParams::zeros(gen);
  p.class_head = Matrix(4, p.class_head.cols);
  auto sc = generate_scene(1, gen);
  EXPECT_THROW(log_prob(p, sc, StructuredAction{}, gen), std::invalid_argument);
  StructuredAction bad{false, std::nullopt, ActionCode::E20, 0, LengthBucket::Short};
  EXPECT_THROW(log_prob(PolicyParams::zeros(gen), sc, bad, gen), std::invalid_argument);
}

TEST(Gradient, FiniteDifferences) {
  GenParams gen;
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_params(gen, 100 + trial);
    auto sc = generate_scene(rng() % 1000, gen);
    auto a = oracle::random_action(rng, gen);
    EXPECT_LE(oracle::gradient_relative_error(p, sc, a, gen), 1e-4) << "trial " << trial;
  }
}

TEST(Gradient, DirectLogProbAgrees) {
  GenParams gen;
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_params(gen, trial, 1.0);
    auto sc = generate_scene(trial, gen);
    auto a = oracle::random_action(rng, gen);
    SceneFeatures f(sc, gen);
    EXPECT_NEAR(oracle::direct_log_prob(p, f, a, gen), log_prob(p, sc, a, gen), 1e-12);
  }
}

TEST(Gradient, UniformSeekHead) {
  GenParams gen;
  auto p = PolicyParams::zeros(gen);
  auto sc = generate_scene(6, gen);
  SceneFeatures f(sc, gen);
  for (bool seek : {false, true}) {
    StructuredAction a{seek, seek ? std::optional(2) : std::nullopt, ActionCode::E00, 0, LengthBucket::Short};
    auto g = grad_log_prob(p, sc, a, gen);
    for (std::size_t i = 0; i < f.pre.size(); ++i)
      EXPECT_NEAR(g.seek.data[i], ((seek ? 1.0 : 0.0) - 0.5) * f.pre[i], 1e-12);
  }
}

TEST(Gradient, ScoreIdentity) {
  GenParams gen;
  for (std::uint64_t s = 0; s < 3; ++s) {
    auto p = random_params(gen, s, 0.5);
    auto sc = generate_scene(s + 40, gen);
    SceneFeatures f(sc, gen);
    PolicyDistribution d(p, f, gen);
    auto probs = d.all_probs();
    PolicyParams sum = p.zeros_like();
    for (std::size_t i = 0; i < probs.size(); ++i) sum.axpy(probs[i], grad_log_prob(p, f, d, d.space().at(i)));
    EXPECT_LE(sum.norm(), 1e-9);
    PolicyParams fast = weighted_score_sum(p, f, d, std::vector<double>(probs.size(), 1.0));
    EXPECT_LE(fast.norm(), 1e-9);
  }
}

TEST(Gradient, WeightedScoreSumMatchesLoop) {
  GenParams gen;
  auto p = random_params(gen, 9, 0.5);
  auto sc = generate_scene(12, gen);
  SceneFeatures f(sc, gen);
  PolicyDistribution d(p, f, gen);
  RewardTable table(sc, gen, RewardConfig{});
  auto probs = d.all_probs();
  PolicyParams slow = p.zeros_like();
  for (std::size_t i = 0; i < probs.size(); ++i)
    slow.axpy(probs[i] * table.total(i), grad_log_prob(p, f, d, d.space().at(i)));
  PolicyParams fast = exact_reward_gradient(p, f, d, table);
  PolicyParams diff = fast;
  diff.axpy(-1.0, slow);
  EXPECT_LE(diff.norm(), 1e-9 * std::max(1.0, slow.norm()));
}

TEST(Sampling, Deterministic) {
  GenParams gen;
  auto p = random_params(gen, 3);
  auto sc = generate_scene(8, gen);
  Rng a(55), b(55);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_action(p, sc, gen, a), sample_action(p, sc, gen, b));
}

TEST(Sampling, Saturated) {
  GenParams gen;
  auto p = PolicyParams::zeros(gen);
  p.seek.at(0, 0) = -1e6;
  p.class_head.at(1, 0) = 1e6;
  p.answer_cell.at(7, 0) = 1e6;
  p.length.at(2, 0) = 1e6;
  auto sc = generate_scene(8, gen);
  Rng rng(1);
  StructuredAction want{false, std::nullopt, gen.classes[1], 7, LengthBucket::Long};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_action(p, sc, gen, rng), want);
  SceneFeatures f(sc, gen);
  EXPECT_EQ(greedy_action(PolicyDistribution(p, f, gen)), want);
}

TEST(Sampling, UniformClassFrequencies) {
  GenParams gen;
  auto p = PolicyParams::zeros(gen);
  auto sc = generate_scene(8, gen);
  SceneFeatures f(sc, gen);
  PolicyDistribution d(p, f, gen);
  Rng rng(2024);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[std::size_t(gen.class_index(sample_action(d, rng).class_code))];
  for (int c : counts) EXPECT_NEAR(double(c) / n, 0.2, 0.01);
}

TEST(ExpectedReward, UniformEqualsGridMean) {
  GenParams gen;
  for (std::uint64_t s : {1, 2}) {
    auto sc = generate_scene(s, gen);
    EXPECT_NEAR(exact_expected_reward(PolicyParams::zeros(gen), sc, gen, RewardConfig{}), oracle::grid_mean_reward(sc, gen),
                1e-9);
  }
}

TEST(ExpectedReward, DeterministicAndConvex) {
  GenParams gen;
  auto sc = generate_scene(5, gen);
  RewardTable table(sc, gen, RewardConfig{});
  auto oracle = oracle_action(sc, gen);
  PolicyParams p = PolicyParams::zeros(gen);
  p.seek.at(0, 0) = oracle.seek ? 1e6 : -1e6;
  if (oracle.seek) p.seek_cell.at(*oracle.seek_cell, 0) = 1e6;
  p.class_head.at(gen.class_index(oracle.class_code), 0) = 1e6;
  p.answer_cell.at(oracle.answer_cell, 0) = 1e6;
  p.length.at(static_cast<int>(oracle.length), 0) = 1e6;
  double want = total_reward(render_transcript(render_action(oracle, sc)), ground_truth(sc)).total;
  EXPECT_NEAR(exact_expected_reward(p, sc, gen, RewardConfig{}), want, 1e-9);

  auto [lo, hi] = std::minmax_element(table.totals().begin(), table.totals().end());
  for (std::uint64_t s = 0; s < 5; ++s) {
    double v = exact_expected_reward(random_params(gen, s, 2.0), sc, gen, RewardConfig{});
    EXPECT_GE(v, *lo - 1e-12);
    EXPECT_LE(v, *hi + 1e-12);
  }
}

TEST(Reflect, Limits) {
  GenParams gen;
  auto sc = generate_scene(7, gen);
  auto p = random_params(gen, 7);
  SceneFeatures f(sc, gen);
  PolicyDistribution d(p, f, gen);
  RewardTable table(sc, gen, RewardConfig{});
  StructuredAction y0{false, std::nullopt, ActionCode::E00, 0, LengthBucket::Short};
  auto tilted = reflect(d, table, y0, {0.0});
  auto probs = d.all_probs();
  for (std::size_t i = 0; i < probs.size(); ++i) EXPECT_NEAR(tilted[i], probs[i], 1e-15);
  auto sharp = reflect(d, table, y0, {1e6});
  EXPECT_NEAR(expected_accuracy(sharp, table), 1.0, 1e-9);
  EXPECT_THROW(reflect(d, table, y0, {-1.0}), std::invalid_argument);
}

TEST(Reflect, Monotone) {
  GenParams gen;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto sc = generate_scene(s + 70, gen);
    auto p = random_params(gen, s, 1.0);
    SceneFeatures f(sc, gen);
    PolicyDistribution d(p, f, gen);
    RewardTable table(sc, gen, RewardConfig{});
    auto y0 = greedy_action(d);
    double prev = -1;
    for (double lambda : {0.0, 0.1, 0.5, 1.0, 2.0}) {
      double v = expected_accuracy(reflect(d, table, y0, {lambda}), table);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

TEST(Render, Template) {
  GenParams gen;
  StructuredAction a{false, std::nullopt, ActionCode::E18, 5, LengthBucket::Short};
  auto t = render_action(a, gen.grid());
  EXPECT_EQ(think_token_count(t), 4u);
  auto text = render_transcript(t);
  EXPECT_NE(text.find("<answer>E18;[4,4,8,8]</answer>"), std::string::npos) << text;

  a.seek = true;
  a.seek_cell = 5;
  text = render_transcript(render_action(a, gen.grid()));
  EXPECT_NE(text.find("<seeking>[4,4,8,8]</seeking>"), std::string::npos);

  a = {false, std::nullopt, ActionCode::E00, 5, LengthBucket::Long};
  text = render_transcript(render_action(a, gen.grid()));
  EXPECT_NE(text.find("<answer>E00</answer>"), std::string::npos);
}

TEST(Render, ParseRecoversAction) {
  GenParams gen;
  ActionSpace space(gen);
  for (std::size_t i = 0; i < space.size(); i += 13) {
    auto a = space.at(i);
    auto t = parse_transcript(render_transcript(render_action(a, gen.grid())));
    EXPECT_EQ(t.seek.has_value(), a.seek);
    if (a.seek) {
      EXPECT_EQ(*t.seek->region, cell_rect(*a.seek_cell, gen.grid()));
    }
    EXPECT_EQ(t.answer->class_code, a.class_code);
    if (is_abnormal(a.class_code)) {
      ASSERT_EQ(t.answer->evidence_boxes->size(), 1u);
      EXPECT_EQ((*t.answer->evidence_boxes)[0], cell_rect(a.answer_cell, gen.grid()));
    } else {
      EXPECT_TRUE(t.answer->evidence_boxes->empty());
    }
  }
}

TEST(Render, CropEvidenceWhenSeekingAnswerCell) {
  GenParams gen;
  SceneSpec sc;
  for (std::uint64_t s = 0;; ++s) {
    sc = generate_scene(s, gen);
    if (sc.ambiguous) break;
  }
  int cell = *sc.gt_seek_cell();
  StructuredAction a{true, cell, sc.class_code, cell, LengthBucket::Short};
  auto t = render_action(a, sc);
  ASSERT_EQ(t.answer->evidence_boxes->size(), 1u);
  auto box = (*t.answer->evidence_boxes)[0];
  EXPECT_EQ(box, *detect_in_cell(sc, cell));
  EXPECT_GT(iou(box, *sc.anomaly_rect), iou(cell_rect(cell, gen.grid()), *sc.anomaly_rect));
}

}  // namespace
}  // namespace a2seek
