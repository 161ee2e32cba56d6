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

// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "a2seek/cli.hpp"
#include "a2seek/experiments.hpp"
#include "oracles.hpp"

namespace a2seek {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt_double(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1 ----

Outcome reward_conformance() {
  GroundTruth gt;
  gt.class_code = ActionCode::E18;
  gt.boxes = {{5, 5, 7, 7}};
  gt.seek_required = true;
  gt.seek_region = BoundingBox{4, 4, 8, 8};
  gt.frame_dims = {16, 16};
  GroundTruth normal;
  normal.frame_dims = {16, 16};
  const std::string think = "<think><|Trigger|>two people close<|Diagnose|>arms swing fast</think>";

  struct Case {
    const char* what;
    double got;
    double want;
  };
  std::vector<Case> cases = {
      {"exact match", total_reward(think + "<answer>E18</answer>", gt).accuracy, 1.0},
      {"cross-abnormal", total_reward(think + "<answer>E03</answer>", gt).accuracy, 0.1},
      {"normal for abnormal", total_reward(think + "<answer>E00</answer>", gt).accuracy, 0.0},
      {"abnormal for normal", total_reward(think + "<answer>E18</answer>", normal).accuracy, 0.0},
      {"normal exact", total_reward(think + "<answer>E00</answer>", normal).accuracy, 1.0},
      {"format ok", total_reward(think + "<answer>E18</answer>", gt).format, 1.0},
      {"format broken", total_reward("<think><|Trigger|>x<answer>E18</answer>", gt).format, 0.0},
      {"no think: format", total_reward("<answer>E18</answer>", gt).format, 0.0},
      {"no think: length", total_reward("<answer>E18</answer>", gt).length, 0.0},
      {"no answer: length", total_reward(think, gt).length, 0.0},
      {"wrong, 32 tokens", length_reward(false, 32, RewardConfig{}, true), 0.5},
      {"correct, 0 tokens", length_reward(true, 0, RewardConfig{}, true), 1.0},
  };
  int bad = 0;
  std::string first;
  for (const auto& c : cases) {
    if (c.got != c.want) {
      if (!bad) first = std::string(c.what) + " gave " + fmt_double("%.17g", c.got);
      ++bad;
    }
  }
  return {bad == 0, std::to_string(cases.size() - bad) + "/" + std::to_string(cases.size()) + " exact" +
                        (bad ? "; " + first : "")};
}

// ---- 2 ----

Outcome iou_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    BoundingBox a = oracle::random_grid_box(rng), b = oracle::random_grid_box(rng);
    worst = std::max(worst, std::abs(iou(a, b) - oracle::pixel_iou(a, b)));
  }
  return {worst <= 1e-12, "max |diff| " + fmt_double("%.3g", worst) + " over 1000 pairs"};
}

// ---- 3 ----

Outcome gradient_check() {
  GenParams gen;
  std::mt19937_64 rng(303);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    PolicyParams p = oracle::random_params(gen, 3000 + t);
    SceneSpec sc = generate_scene(rng() % 100000, gen);
    StructuredAction a = oracle::random_action(rng, gen);
    worst = std::max(worst, oracle::gradient_relative_error(p, sc, a, gen, 1e-5));
  }
  return {worst <= 1e-4, "max relative L2 error " + fmt_double("%.3g", worst) + " over 100 triples"};
}

// ---- 4 ----

Outcome exact_oracle() {
  GenParams gen;
  double worst = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SceneSpec sc = generate_scene(derive_seed(404, s), gen);
    double exact = exact_expected_reward(PolicyParams::zeros(gen), sc, gen, RewardConfig{});
    worst = std::max(worst, std::abs(exact - oracle::grid_mean_reward(sc, gen)));
  }
  return {worst <= 1e-9, "max |diff| " + fmt_double("%.3g", worst) + " on 10 scenes"};
}

// ---- 5 ----

Outcome agrpo_improvement() {
  GenParams gen;
  TrainConfig sft;
  sft.seed = 7;
  PolicyParams ref = run_sft(sft).params;
  std::vector<SceneSpec> scenes;
  std::vector<RewardTable> tables;
  for (std::uint64_t i = 0; i < 10; ++i) {
    scenes.push_back(generate_scene(derive_seed(555, i), gen));
    tables.emplace_back(scenes.back(), gen, RewardConfig{});
  }
  int up = 0, flat = 0;
  for (int t = 0; t < 100; ++t) {
    const SceneSpec& sc = scenes[static_cast<std::size_t>(t % 10)];
    const RewardTable& table = tables[static_cast<std::size_t>(t % 10)];
    SceneFeatures f(sc, gen);
    PolicyDistribution before(ref, f, gen);
    Rng rng(derive_seed(777, static_cast<std::uint64_t>(t)));
    GroupSample g = sample_group(before, sc, 8, rng, RewardConfig{});
    if (g.advantage() == 0) ++flat;
    PolicyParams next = agrpo_update(ref, f, g, ref, 0.05, 1e-3, gen);
    up += exact_expected_reward(PolicyDistribution(next, f, gen), table) > exact_expected_reward(before, table);
  }
  return {up >= 95, std::to_string(up) + "/100 increased (" + std::to_string(flat) + " groups with zero advantage)"};
}

// ---- 6, 7 ----

const std::vector<SceneSpec>& ambiguous_eval() {
  static const std::vector<SceneSpec> scenes = make_scenes(heldout_seeds(99, 500), ambiguous_heavy(GenParams{}));
  return scenes;
}

Outcome seek_reward_direction() {
  int wins = 0;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SeekAblation ab = seek_reward_ablation(seed, ambiguous_eval());
    const auto& w = ab.with_seek_reward;
    const auto& o = ab.without_seek_reward;
    bool win = w.accuracy >= o.accuracy + 0.05 && w.mean_iou > o.mean_iou;
    wins += win;
    rows += " s" + std::to_string(seed) + " acc " + fmt_double("%.3f", w.accuracy) + "/" + fmt_double("%.3f", o.accuracy) +
            " iou " + fmt_double("%.3f", w.mean_iou) + "/" + fmt_double("%.3f", o.mean_iou) + ";";
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds (with/without):" + rows};
}

Outcome sft_style_direction() {
  int wins = 0;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double got = sft_style_score(seed, TargetStyle::GraphOfThought, ambiguous_eval()).accuracy;
    double ans = sft_style_score(seed, TargetStyle::AnswerOnly, ambiguous_eval()).accuracy;
    wins += got >= ans;
    rows += " s" + std::to_string(seed) + " " + fmt_double("%.3f", got) + "/" + fmt_double("%.3f", ans) + ";";
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds (got/answer-only acc):" + rows};
}

// ---- 8 ----

Outcome reflection_bound() {
  GenParams gen;
  int violations = 0;
  double min_gain = INFINITY;
  for (int i = 0; i < 20; ++i) {
    SceneSpec sc = generate_scene(derive_seed(808, static_cast<std::uint64_t>(i)), gen);
    PolicyParams p = oracle::random_params(gen, 8000 + static_cast<std::uint64_t>(i), 1.0);
    PolicyDistribution d(p, SceneFeatures(sc, gen), gen);
    RewardTable table(sc, gen, RewardConfig{});
    Rng pick(derive_seed(809, static_cast<std::uint64_t>(i)));
    StructuredAction y0 = sample_action(d, pick);
    double prev = -INFINITY, first = 0;
    for (double lambda : {0.0, 0.1, 0.5, 1.0, 2.0}) {
      double v = expected_accuracy(reflect(d, table, y0, {lambda}), table);
      if (lambda == 0.0) first = v;
      if (v < prev) ++violations;
      prev = v;
    }
    min_gain = std::min(min_gain, prev - first);
  }
  return {violations == 0, std::to_string(violations) + " violations on 20 pairs; min gain 0 -> 2 " + fmt_double("%.3g", min_gain)};
}

// ---- 9 ----

Outcome kl_direction() {
  GenParams gen;
  int wins = 0;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PolicyParams ref = run_sft(ablation_sft_config(seed)).params;
    TrainConfig rl = ablation_rl_config(seed);
    std::vector<SceneSpec> held = make_scenes(heldout_seeds(seed, 50), gen);
    auto mean_kl = [&](double beta) {
      rl.kl_beta = beta;
      PolicyParams p = run_agrpo(rl, ref).params;
      double s = 0;
      for (const auto& sc : held) s += kl_divergence(p, ref, sc, gen).first;
      return s / static_cast<double>(held.size());
    };
    double strong = mean_kl(0.5), none = mean_kl(0.0);
    wins += strong < none;
    rows += " " + fmt_double("%.3f", strong) + "/" + fmt_double("%.3f", none) + ";";
  }
  return {wins >= 9, std::to_string(wins) + "/10 seeds (KL at beta 0.5/0):" + rows};
}

// ---- 10 ----

bool close(const std::optional<double>& a, const std::optional<double>& b, double tol) {
  if (a.has_value() != b.has_value()) return false;
  return !a || std::abs(*a - *b) <= tol;
}

Outcome metrics_oracle() {
  std::mt19937_64 rng(1010);
  int bad = 0, checks = 0;
  for (int set = 0; set < 50; ++set) {
    auto rs = oracle::random_records(rng, 5 + rng() % 40);
    ClassificationAp ap = classification_ap(rs);
    std::map<SceneCode, std::vector<EvalRecord>> groups;
    for (const auto& r : rs) groups[r.scene_code].push_back(r);
    for (const auto& [code, g] : groups) {
      ++checks;
      bad += !close(ap.per_scene[code], oracle::naive_classification_ap(g), 1e-9);
    }
    ++checks;
    bad += !close(classification_ap_all(rs), oracle::naive_classification_ap(rs), 1e-9);
    ++checks;
    bad += !close(mean_iou(rs), oracle::naive_mean_iou(rs), 1e-9);
    for (double t : kDetectionThresholds) {
      ++checks;
      bad += !close(detection_ap(rs, t), oracle::naive_detection_ap(rs, t), 1e-9);
    }
  }
  // The hand-derived cases are quoted rounded (0.71653, 0.6667); compare
  // against their exact forms exp(1 - 4/3) and 2/3.
  struct Fixture {
    double got, want;
  };
  std::vector<Fixture> text = {
      {bleu("a person falls near the bench", {"a person falls near the bench"}), 1.0},
      {bleu("x y z", {"a b c"}), 0.0},
      {bleu("the cat sat", {"the cat sat down"}, 3), std::exp(1.0 - 4.0 / 3.0)},
      {rouge_l("a b c", "a b c"), 1.0},
      {rouge_l("a b c", "d e f"), 0.0},
      {rouge_l("a b c", "a c b"), 2.0 / 3.0},
  };
  int text_bad = 0;
  for (const auto& f : text) text_bad += std::abs(f.got - f.want) > 1e-6;
  return {bad == 0 && text_bad == 0, std::to_string(checks - bad) + "/" + std::to_string(checks) + " metric checks on 50 sets; " +
                                         std::to_string(text_bad) + " text fixture mismatches"};
}

// ---- 11 ----

Outcome information_structure() {
  GenParams gen;
  GenParams amb_gen = ambiguous_heavy(gen);
  double before = 0, after = 0;
  int n = 0;
  for (std::uint64_t s = 0; n < 200; ++s) {
    SceneSpec sc = generate_scene(derive_seed(1111, s), amb_gen);
    if (!sc.ambiguous) continue;
    before += entropy_bits(class_posterior(observe(sc, std::nullopt), gen));
    after += entropy_bits(class_posterior(observe(sc, sc.gt_seek_region), gen));
    ++n;
  }
  before /= n;
  after /= n;
  GenParams clean = amb_gen;
  clean.noise_sigma = 0;
  double gain = -1;
  for (std::uint64_t s = 0;; ++s) {
    SceneSpec sc = generate_scene(derive_seed(1112, s), clean);
    if (!sc.ambiguous) continue;
    gain = information_gain(sc, *sc.gt_seek_region, clean);
    break;
  }
  bool ok = before >= 0.9 && after <= 0.1 && std::abs(gain - 1.0) <= 1e-12;
  return {ok, "mean H before " + fmt_double("%.4f", before) + " bits, after " + fmt_double("%.4f", after) + " bits (" +
                  std::to_string(n) + " ambiguous scenes); noiseless gain " + fmt_double("%.15f", gain)};
}

// ---- 12 ----

std::string pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = (fs::path(A2SEEK_CONFIGS) / "default.json").string();
  std::ostringstream out, err;
  auto step = [&](std::vector<std::string> args) {
    int rc = run_command(args, out, err);
    if (rc != 0) throw std::runtime_error(args[0] + " failed (" + std::to_string(rc) + "): " + err.str());
  };
  step({"gen-data", "--seed", "12", "--count", "200", "--out", (dir / "data").string()});
  step({"train", "--stage", "sft", "--config", cfg, "--out", (dir / "sft").string()});
  step({"train", "--stage", "agrpo", "--config", cfg, "--out", (dir / "rl").string(), "--init", (dir / "sft" / "checkpoint.json").string()});
  step({"eval", "--ckpt", (dir / "rl" / "checkpoint.json").string(), "--data", (dir / "data").string(), "--report", (dir / "report").string()});
  return read_text_file(dir / "report" / "metrics.json");
}

Outcome determinism() {
  fs::path root = fs::temp_directory_path() / "a2seek_acceptance";
  std::string a, b;
  try {
    a = pipeline(root / "run_a");
    b = pipeline(root / "run_b");
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
  fs::remove_all(root);
  return {a == b && !a.empty(), std::to_string(a.size()) + " bytes, fnv1a " + hex64(fnv1a(a)) + " vs " +
                                    hex64(fnv1a(b))};
}

}  // namespace
}  // namespace a2seek

int main(int argc, char** argv) {
  using namespace a2seek;
  spdlog::set_level(spdlog::level::warn);
  std::vector<Criterion> all = {
      {1, "reward conformance", 1, reward_conformance},
      {2, "IoU oracle equivalence", 1, iou_oracle},
      {3, "gradient correctness", 10, gradient_check},
      {4, "exact oracle consistency", 30, exact_oracle},
      {5, "A-GRPO improvement", 120, agrpo_improvement},
      {6, "seeking reward ablation", 600, seek_reward_direction},
      {7, "SFT target ablation", 600, sft_style_direction},
      {8, "reflection bound", 30, reflection_bound},
      {9, "KL regularization direction", 600, kl_direction},
      {10, "metrics oracle equivalence", 10, metrics_oracle},
      {11, "information structure", 30, information_structure},
      {12, "end-to-end determinism", 900, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o = c.run();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs < c.budget_s;
    bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d (%s): %s [%.2f s of %.0f s]%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  return failures;
}
