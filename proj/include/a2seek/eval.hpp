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

// Evaluation metrics over prediction records: per-scene classification AP,
// localization mIoU and AP at IoU thresholds, BLEU and ROUGE-L, and the
// metrics.json / per_scene.csv report.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "a2seek/codes.hpp"
#include "a2seek/geometry.hpp"
#include "a2seek/io.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/serialize.hpp"

namespace a2seek {

struct EvalRecord {
  SceneCode scene_code = SceneCode::S00;
  GroundTruth gt;
  std::optional<ActionCode> pred_class;
  double pred_confidence = 0;
  std::vector<BoundingBox> pred_boxes;
  std::string pred_text;
  std::vector<std::string> ref_texts;

  bool predicts_abnormal() const { return pred_class && is_abnormal(*pred_class); }
};

inline constexpr std::array<double, 5> kDetectionThresholds = {0.0, 0.25, 0.5, 0.75, 0.9};

namespace eval_detail {

/// All-points interpolated AP of a scored list. Equal scores form a single
/// threshold step, so the result does not depend on record order.
/// Returns nullopt when there are no positives.
inline std::optional<double> average_precision(std::vector<std::pair<double, bool>> scored, std::size_t positives) {
  if (positives == 0) return std::nullopt;
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> recall;
  std::vector<double> precision;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      if (scored[j].second) ++tp; else ++fp;
      ++j;
    }
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    i = j;
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0;
  double prev = 0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev) * precision[i];
    prev = recall[i];
  }
  return ap;
}

inline std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

inline std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n))];
  return counts;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace eval_detail

struct ClassificationAp {
  std::map<SceneCode, std::optional<double>> per_scene;
  std::optional<double> macro;  // mean over scenes with a defined AP
};

/// Positives are abnormal ground truth; the score is pred_confidence for
/// abnormal predictions and 0 otherwise.
inline std::optional<double> classification_ap_all(const std::vector<EvalRecord>& records) {
  std::vector<std::pair<double, bool>> scored;
  std::size_t positives = 0;
  for (const auto& r : records) {
    bool pos = is_abnormal(r.gt.class_code);
    positives += pos;
    scored.push_back({r.predicts_abnormal() ? r.pred_confidence : 0.0, pos});
  }
  return eval_detail::average_precision(std::move(scored), positives);
}

inline ClassificationAp classification_ap(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("EmptyInput: classification_ap needs records");
  std::map<SceneCode, std::vector<EvalRecord>> groups;
  for (const auto& r : records) groups[r.scene_code].push_back(r);
  ClassificationAp out;
  double sum = 0;
  int n = 0;
  for (const auto& [code, rs] : groups) {
    auto ap = classification_ap_all(rs);
    out.per_scene[code] = ap;
    if (ap) {
      sum += *ap;
      ++n;
    }
  }
  if (n > 0) out.macro = sum / n;
  return out;
}

/// Mean localization score over records with ground-truth boxes; a record
/// with no predicted box scores 0. nullopt when no record has boxes.
inline std::optional<double> mean_iou(const std::vector<EvalRecord>& records) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.gt.boxes.empty()) continue;
    sum += localization_reward(r.pred_boxes, r.gt.boxes);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

/// Highest IoU between any predicted and any ground-truth box of a record.
inline double best_iou(const EvalRecord& r) {
  double best = 0;
  for (const auto& p : r.pred_boxes)
    for (const auto& g : r.gt.boxes) best = std::max(best, iou(p, g));
  return best;
}

/// AP over abnormal predictions ranked by confidence. A prediction is a hit
/// when its best IoU is >= tau (for tau = 0: strictly positive overlap).
/// Recall is over records with ground-truth boxes.
inline std::optional<double> detection_ap(const std::vector<EvalRecord>& records, double tau) {
  if (!(tau >= 0) || !(tau < 1)) throw std::invalid_argument("detection_ap: tau must be in [0, 1)");
  std::vector<std::pair<double, bool>> scored;
  std::size_t positives = 0;
  for (const auto& r : records) {
    if (!r.gt.boxes.empty()) ++positives;
    if (!r.predicts_abnormal()) continue;
    double v = best_iou(r);
    bool hit = !r.gt.boxes.empty() && (tau == 0 ? v > 0 : v >= tau);
    scored.push_back({r.pred_confidence, hit});
  }
  return eval_detail::average_precision(std::move(scored), positives);
}

/// Sentence BLEU with uniform weights up to min(max_n, hypothesis length),
/// clipped counts against all references, and a brevity penalty against the
/// closest reference length (shorter wins ties).
inline double bleu(std::string_view hypothesis, const std::vector<std::string>& references, int max_n = 4) {
  if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");
  auto hyp = eval_detail::tokens(hypothesis);
  if (hyp.empty() || references.empty()) return 0.0;
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(eval_detail::tokens(r));
  const std::size_t order = std::min<std::size_t>(static_cast<std::size_t>(max_n), hyp.size());
  double log_sum = 0;
  for (std::size_t n = 1; n <= order; ++n) {
    auto counts = eval_detail::ngram_counts(hyp, n);
    std::map<std::vector<std::string>, int> max_ref;
    for (const auto& ref : refs)
      for (const auto& [g, c] : eval_detail::ngram_counts(ref, n)) max_ref[g] = std::max(max_ref[g], c);
    long clipped = 0;
    long total = 0;
    for (const auto& [g, c] : counts) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }
  const double c = static_cast<double>(hyp.size());
  double r = static_cast<double>(refs.front().size());
  for (const auto& ref : refs) {
    double len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(order));
}

/// LCS-based F1 over whitespace tokens.
inline double rouge_l(std::string_view hypothesis, std::string_view reference) {
  auto h = eval_detail::tokens(hypothesis);
  auto r = eval_detail::tokens(reference);
  if (h.empty() || r.empty()) return 0.0;
  std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (std::size_t i = 1; i <= h.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j)
      cur[j] = h[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  double lcs = static_cast<double>(prev[r.size()]);
  if (lcs == 0) return 0.0;
  double p = lcs / static_cast<double>(h.size());
  double rc = lcs / static_cast<double>(r.size());
  return 2 * p * rc / (p + rc);
}

struct MetricRow {
  std::string scene;
  std::optional<double> ap_c;
  std::optional<double> miou;
  std::array<std::optional<double>, kDetectionThresholds.size()> ap_at;
  std::optional<double> bleu;
  std::optional<double> rouge_l;
  std::size_t n_records = 0;
};

/// Language metrics averaged over records that carry references; BLEU up to
/// 4-grams, ROUGE-L against the best-matching reference.
inline std::pair<std::optional<double>, std::optional<double>> language_metrics(const std::vector<EvalRecord>& records) {
  std::vector<double> b, r;
  for (const auto& rec : records) {
    if (rec.ref_texts.empty()) continue;
    b.push_back(bleu(rec.pred_text, rec.ref_texts, 4));
    double best = 0;
    for (const auto& ref : rec.ref_texts) best = std::max(best, rouge_l(rec.pred_text, ref));
    r.push_back(best);
  }
  if (b.empty()) return {std::nullopt, std::nullopt};
  return {eval_detail::mean_of(b), eval_detail::mean_of(r)};
}

inline MetricRow metric_row(const std::string& name, const std::vector<EvalRecord>& records) {
  MetricRow row;
  row.scene = name;
  row.n_records = records.size();
  row.ap_c = classification_ap_all(records);
  row.miou = mean_iou(records);
  for (std::size_t i = 0; i < kDetectionThresholds.size(); ++i) row.ap_at[i] = detection_ap(records, kDetectionThresholds[i]);
  std::tie(row.bleu, row.rouge_l) = language_metrics(records);
  return row;
}

struct Report {
  std::vector<MetricRow> scenes;
  MetricRow macro;    // mean of the scene rows (nulls skipped)
  MetricRow overall;  // pooled over all records
};

inline Report build_report(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("EmptyInput: report needs records");
  std::map<SceneCode, std::vector<EvalRecord>> groups;
  for (const auto& r : records) groups[r.scene_code].push_back(r);
  Report rep;
  for (const auto& [code, rs] : groups) rep.scenes.push_back(metric_row(to_string(code), rs));
  auto avg = [&](auto get) -> std::optional<double> {
    double s = 0;
    int n = 0;
    for (const auto& row : rep.scenes)
      if (auto v = get(row)) {
        s += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return s / n;
  };
  rep.macro.scene = "macro";
  rep.macro.n_records = records.size();
  rep.macro.ap_c = avg([](const MetricRow& r) { return r.ap_c; });
  rep.macro.miou = avg([](const MetricRow& r) { return r.miou; });
  for (std::size_t i = 0; i < kDetectionThresholds.size(); ++i)
    rep.macro.ap_at[i] = avg([i](const MetricRow& r) { return r.ap_at[i]; });
  rep.macro.bleu = avg([](const MetricRow& r) { return r.bleu; });
  rep.macro.rouge_l = avg([](const MetricRow& r) { return r.rouge_l; });
  rep.overall = metric_row("all", records);
  return rep;
}

namespace eval_detail {

inline std::string threshold_label(double t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%g", t);
  return std::string("AP@") + buf;
}

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::string csv_value(const std::optional<double>& v) {
  if (!v) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

inline Json row_json(const MetricRow& r) {
  Json j;
  j["AP_c"] = opt_json(r.ap_c);
  j["mIoU"] = opt_json(r.miou);
  for (std::size_t i = 0; i < kDetectionThresholds.size(); ++i) j[threshold_label(kDetectionThresholds[i])] = opt_json(r.ap_at[i]);
  j["BLEU"] = opt_json(r.bleu);
  j["ROUGE_L"] = opt_json(r.rouge_l);
  j["n_records"] = r.n_records;
  return j;
}

}  // namespace eval_detail

inline Json report_json(const Report& rep) {
  Json j;
  j["macro"] = eval_detail::row_json(rep.macro);
  j["overall"] = eval_detail::row_json(rep.overall);
  Json per = Json::object();
  for (const auto& r : rep.scenes) per[r.scene] = eval_detail::row_json(r);
  j["per_scene"] = std::move(per);
  j["conventions"] = {{"ap_interpolation", "all-points"},
                      {"ties", "equal scores form one threshold step"},
                      {"tau_0", "hit iff best IoU > 0 (interpretation)"},
                      {"ap_c_score", "pred_confidence if predicted abnormal, else 0"}};
  return j;
}

inline std::string report_csv(const Report& rep) {
  std::string out = "scene,AP_c,mIoU";
  for (double t : kDetectionThresholds) out += "," + eval_detail::threshold_label(t);
  out += ",BLEU,ROUGE_L,n_records\n";
  auto line = [&](const MetricRow& r) {
    out += r.scene + "," + eval_detail::csv_value(r.ap_c) + "," + eval_detail::csv_value(r.miou);
    for (const auto& v : r.ap_at) out += "," + eval_detail::csv_value(v);
    out += "," + eval_detail::csv_value(r.bleu) + "," + eval_detail::csv_value(r.rouge_l) + "," + std::to_string(r.n_records) + "\n";
  };
  for (const auto& r : rep.scenes) line(r);
  line(rep.macro);
  return out;
}

/// Writes metrics.json and per_scene.csv; returns the written paths.
inline std::vector<std::filesystem::path> make_report(const std::vector<EvalRecord>& records, const std::filesystem::path& out_dir) {
  Report rep = build_report(records);
  std::vector<std::filesystem::path> written = {out_dir / "metrics.json", out_dir / "per_scene.csv"};
  write_text_file(written[0], report_json(rep).dump(2) + "\n");
  write_text_file(written[1], report_csv(rep));
  return written;
}

// ---- record I/O ----

inline Json to_json(const EvalRecord& r) {
  Json j;
  j["scene"] = to_string(r.scene_code);
  j["gt"] = to_json(r.gt);
  j["pred_class"] = r.pred_class ? Json(to_string(*r.pred_class)) : Json(nullptr);
  j["pred_confidence"] = r.pred_confidence;
  j["pred_boxes"] = Json::array();
  for (const auto& b : r.pred_boxes) j["pred_boxes"].push_back(box_to_json(b));
  j["pred_text"] = r.pred_text;
  j["ref_texts"] = r.ref_texts;
  return j;
}

inline EvalRecord eval_record_from_json(const Json& j, const std::string& pointer) {
  JsonReader r(j, pointer);
  EvalRecord rec;
  std::string scene = r.req<std::string>("scene");
  auto code = parse_scene_code(scene);
  r.check(code.has_value(), "scene", "'" + scene + "' is not a SceneCode (S00..S09)");
  rec.scene_code = *code;
  rec.gt = ground_truth_from_json(r.raw("gt"), r.at("gt"));
  if (r.has("pred_class") && !r.raw("pred_class").is_null()) rec.pred_class = action_from_json(r.raw("pred_class"), r.at("pred_class"));
  r.opt("pred_confidence", rec.pred_confidence);
  r.check(rec.pred_confidence >= 0 && rec.pred_confidence <= 1, "pred_confidence", "must be in [0, 1]");
  if (r.has("pred_boxes")) {
    const Json& bs = r.raw("pred_boxes");
    if (!bs.is_array()) throw ConfigError(r.at("pred_boxes"), "expected an array");
    for (std::size_t i = 0; i < bs.size(); ++i) rec.pred_boxes.push_back(box_from_json(bs[i], r.at("pred_boxes") + "/" + std::to_string(i)));
  }
  r.opt("pred_text", rec.pred_text);
  r.opt("ref_texts", rec.ref_texts);
  r.finish();
  return rec;
}

inline std::string records_to_jsonl(const std::vector<EvalRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

inline std::vector<EvalRecord> records_from_jsonl(const std::string& text) {
  std::vector<EvalRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("line " + std::to_string(line_no), std::string("invalid JSON: ") + e.what());
    }
    out.push_back(eval_record_from_json(j, "line " + std::to_string(line_no)));
  }
  return out;
}

}  // namespace a2seek
