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

// JSON forms of the library's value types: boxes, ground truth, scene
// records, generator/reward/training settings and policy checkpoints.
// Readers are strict: unknown keys, wrong types and out-of-range values throw
// ConfigError carrying a JSON pointer to the offending field.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "a2seek/codes.hpp"
#include "a2seek/geometry.hpp"
#include "a2seek/policy.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/seekenv.hpp"
#include "a2seek/training.hpp"

namespace a2seek {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : std::runtime_error("ConfigError at " + (pointer.empty() ? std::string("/") : pointer) + ": " + what),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// Reads fields of one JSON object, remembering which keys were consumed.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) throw ConfigError(pointer_, "expected an object");
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  bool opt(const std::string& key, T& out) {
    if (!j_.contains(key)) return false;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(at(key), "wrong type");
    }
    return true;
  }

  template <class T>
  T req(const std::string& key) {
    T out{};
    if (!opt(key, out)) throw ConfigError(at(key), "missing required key");
    return out;
  }

  const Json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required key");
    used_.insert(key);
    return j_.at(key);
  }

  void check(bool ok, const std::string& key, const std::string& what) const {
    if (!ok) throw ConfigError(at(key), what);
  }

  /// Throws on the first key (in document order) that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key '" + it.key() + "'");
  }

 private:
  const Json& j_;
  std::string pointer_;
  std::set<std::string> used_;
};

// ---- boxes and codes ----

inline Json box_to_json(const BoundingBox& b) { return Json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

inline BoundingBox box_from_json(const Json& j, const std::string& pointer) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(pointer, "box must be [x_min, y_min, x_max, y_max]");
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw ConfigError(pointer + "/" + std::to_string(i), "box coordinate must be a number");
    v[i] = j[i].get<double>();
  }
  BoundingBox b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) throw ConfigError(pointer, "box must have min <= max");
  return b;
}

inline ActionCode action_from_json(const Json& j, const std::string& pointer) {
  if (!j.is_string()) throw ConfigError(pointer, "action code must be a string");
  auto code = parse_action_code(j.get<std::string>());
  if (!code) throw ConfigError(pointer, "'" + j.get<std::string>() + "' is not an ActionCode (E00..E20)");
  return *code;
}

// ---- ground truth ----

inline Json to_json(const GroundTruth& gt) {
  Json j;
  j["class"] = to_string(gt.class_code);
  j["boxes"] = Json::array();
  for (const auto& b : gt.boxes) j["boxes"].push_back(box_to_json(b));
  j["seek_required"] = gt.seek_required;
  j["seek_region"] = gt.seek_region ? box_to_json(*gt.seek_region) : Json(nullptr);
  j["frame_dims"] = Json::array({gt.frame_dims.width, gt.frame_dims.height});
  return j;
}

inline GroundTruth ground_truth_from_json(const Json& j, const std::string& pointer = "") {
  JsonReader r(j, pointer);
  GroundTruth gt;
  gt.class_code = action_from_json(r.raw("class"), r.at("class"));
  if (r.has("boxes")) {
    const Json& boxes = r.raw("boxes");
    if (!boxes.is_array()) throw ConfigError(r.at("boxes"), "expected an array");
    for (std::size_t i = 0; i < boxes.size(); ++i) gt.boxes.push_back(box_from_json(boxes[i], r.at("boxes") + "/" + std::to_string(i)));
  }
  r.opt("seek_required", gt.seek_required);
  if (r.has("seek_region") && !r.raw("seek_region").is_null())
    gt.seek_region = box_from_json(r.raw("seek_region"), r.at("seek_region"));
  if (r.has("frame_dims")) {
    const Json& d = r.raw("frame_dims");
    if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number())
      throw ConfigError(r.at("frame_dims"), "expected [width, height]");
    gt.frame_dims = {d[0].get<double>(), d[1].get<double>()};
  }
  r.check(gt.consistent(), "seek_region", "seek_region must be present iff seek_required");
  r.finish();
  return gt;
}

inline Json to_json(const RewardBreakdown& b) {
  Json j;
  j["format"] = b.format;
  j["accuracy"] = b.accuracy;
  j["localization"] = b.localization;
  j["seeking"] = b.seeking;
  j["length"] = b.length;
  j["total"] = b.total;
  return j;
}

// ---- settings ----

inline Json to_json(const GenParams& g) {
  Json j;
  j["pixel_dim"] = g.pixel_dim;
  j["coarse_dim"] = g.coarse_dim;
  j["classes"] = Json::array();
  for (auto c : g.classes) j["classes"].push_back(to_string(c));
  j["ambiguous_pair"] = Json::array({to_string(g.ambiguous_pair.first), to_string(g.ambiguous_pair.second)});
  j["noise_sigma"] = g.noise_sigma;
  j["anomaly_min"] = g.anomaly_min;
  j["anomaly_max"] = g.anomaly_max;
  j["class_prior"] = g.class_prior;
  return j;
}

inline GenParams gen_params_from_json(const Json& j, const std::string& pointer = "") {
  JsonReader r(j, pointer);
  GenParams g;
  r.opt("pixel_dim", g.pixel_dim);
  r.opt("coarse_dim", g.coarse_dim);
  if (r.has("classes")) {
    const Json& cs = r.raw("classes");
    if (!cs.is_array()) throw ConfigError(r.at("classes"), "expected an array");
    g.classes.clear();
    for (std::size_t i = 0; i < cs.size(); ++i) g.classes.push_back(action_from_json(cs[i], r.at("classes") + "/" + std::to_string(i)));
    if (!r.has("class_prior")) g.class_prior.assign(g.classes.size(), 1.0 / static_cast<double>(g.classes.size()));
  }
  if (r.has("ambiguous_pair")) {
    const Json& p = r.raw("ambiguous_pair");
    if (!p.is_array() || p.size() != 2) throw ConfigError(r.at("ambiguous_pair"), "expected two action codes");
    g.ambiguous_pair = {action_from_json(p[0], r.at("ambiguous_pair") + "/0"), action_from_json(p[1], r.at("ambiguous_pair") + "/1")};
  }
  r.opt("noise_sigma", g.noise_sigma);
  r.opt("anomaly_min", g.anomaly_min);
  r.opt("anomaly_max", g.anomaly_max);
  r.opt("class_prior", g.class_prior);
  r.finish();
  try {
    g.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(pointer, e.what());
  }
  return g;
}

inline Json to_json(const RewardConfig& c) {
  Json j;
  j["weights"] = {{"format", c.weights.format},
                  {"accuracy", c.weights.accuracy},
                  {"localization", c.weights.localization},
                  {"seeking", c.weights.seeking},
                  {"length", c.weights.length}};
  j["partial_credit"] = c.partial_credit;
  j["l_max"] = c.l_max;
  j["length_clamp"] = c.length_clamp;
  j["seek_scale_beta"] = c.seek_scale_beta;
  return j;
}

inline RewardConfig reward_config_from_json(const Json& j, const std::string& pointer = "") {
  JsonReader r(j, pointer);
  RewardConfig c;
  if (r.has("weights")) {
    JsonReader w(r.raw("weights"), r.at("weights"));
    const std::pair<const char*, double*> fields[] = {{"format", &c.weights.format},
                                                      {"accuracy", &c.weights.accuracy},
                                                      {"localization", &c.weights.localization},
                                                      {"seeking", &c.weights.seeking},
                                                      {"length", &c.weights.length}};
    for (const auto& [key, slot] : fields)
      if (w.opt(key, *slot)) w.check(*slot >= 0 && std::isfinite(*slot), key, "weight must be finite and >= 0");
    w.finish();
  }
  r.opt("partial_credit", c.partial_credit);
  r.check(c.partial_credit >= 0 && c.partial_credit <= 1, "partial_credit", "must be in [0, 1]");
  r.opt("l_max", c.l_max);
  r.check(c.l_max >= 1, "l_max", "must be >= 1");
  r.opt("length_clamp", c.length_clamp);
  r.opt("seek_scale_beta", c.seek_scale_beta);
  r.check(c.seek_scale_beta >= 0, "seek_scale_beta", "must be >= 0");
  r.finish();
  return c;
}

/// Training fields sit flat in the run config; this reads the ones present.
inline void read_train_fields(JsonReader& r, TrainConfig& t) {
  r.opt("group_size", t.group_size);
  r.check(t.group_size >= 2, "group_size", "must be >= 2");
  r.opt("kl_beta", t.kl_beta);
  r.check(t.kl_beta >= 0, "kl_beta", "must be >= 0");
  r.opt("learning_rate", t.learning_rate);
  r.check(t.learning_rate >= 0, "learning_rate", "must be >= 0");
  r.opt("total_steps", t.total_steps);
  r.check(t.total_steps >= 0, "total_steps", "must be >= 0");
  r.opt("warmup_frac", t.warmup_frac);
  r.check(t.warmup_frac >= 0 && t.warmup_frac < 1, "warmup_frac", "must be in [0, 1)");
  r.opt("scenes_per_step", t.scenes_per_step);
  r.check(t.scenes_per_step >= 1, "scenes_per_step", "must be >= 1");
  r.opt("epochs", t.epochs);
  r.check(t.epochs >= 0, "epochs", "must be >= 0");
  r.opt("train_scenes", t.train_scenes);
  r.check(t.train_scenes >= 1, "train_scenes", "must be >= 1");
  std::string style;
  if (r.opt("sft_targets", style)) {
    auto s = parse_target_style(style);
    r.check(s.has_value(), "sft_targets", "must be one of answer, cot, got");
    t.sft_targets = *s;
  }
  r.opt("got_fraction", t.got_fraction);
  r.check(t.got_fraction >= 0 && t.got_fraction <= 1, "got_fraction", "must be in [0, 1]");
}

inline Json train_fields_to_json(const TrainConfig& t) {
  Json j;
  j["group_size"] = t.group_size;
  j["kl_beta"] = t.kl_beta;
  j["learning_rate"] = t.learning_rate;
  j["total_steps"] = t.total_steps;
  j["warmup_frac"] = t.warmup_frac;
  j["scenes_per_step"] = t.scenes_per_step;
  j["epochs"] = t.epochs;
  j["train_scenes"] = t.train_scenes;
  j["sft_targets"] = std::string(to_string(t.sft_targets));
  j["got_fraction"] = t.got_fraction;
  return j;
}

// ---- scenes ----

/// Scene record: enough to regenerate the scene (seed) and to check it.
inline Json scene_record(const SceneSpec& s) {
  Json j;
  j["seed"] = s.seed;
  j["class"] = to_string(s.class_code);
  if (s.placement) {
    j["placement"] = {{"cell", s.placement->cell},
                      {"size", s.placement->size},
                      {"offset_x", s.placement->offset_x},
                      {"offset_y", s.placement->offset_y}};
  } else {
    j["placement"] = nullptr;
  }
  j["ambiguous"] = s.ambiguous;
  j["gt"] = to_json(ground_truth(s));
  return j;
}

// ---- checkpoints ----

inline Json checkpoint_to_json(const PolicyParams& p, const GenParams& gen) {
  Json j;
  j["dims"] = {{"G", p.coarse_dim}, {"P", p.pixel_dim}, {"C", p.num_classes}};
  j["gen"] = to_json(gen);
  Json heads = Json::object();
  auto hs = p.heads();
  for (std::size_t h = 0; h < hs.size(); ++h) {
    Json rows = Json::array();
    for (int r = 0; r < hs[h]->rows; ++r) {
      auto row = hs[h]->row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    heads[PolicyParams::head_names()[h]] = std::move(rows);
  }
  j["heads"] = std::move(heads);
  return j;
}

struct Checkpoint {
  PolicyParams params;
  GenParams gen;
};

inline Checkpoint checkpoint_from_json(const Json& j) {
  JsonReader r(j, "");
  Checkpoint ck;
  ck.gen = gen_params_from_json(r.raw("gen"), "/gen");
  JsonReader dims(r.raw("dims"), "/dims");
  int G = dims.req<int>("G"), P = dims.req<int>("P"), C = dims.req<int>("C");
  dims.finish();
  if (G != ck.gen.coarse_dim || P != ck.gen.pixel_dim || C != ck.gen.num_classes())
    throw ConfigError("/dims", "ShapeMismatch: dims disagree with generator settings");
  ck.params = PolicyParams::zeros(ck.gen);
  JsonReader heads(r.raw("heads"), "/heads");
  auto hs = ck.params.heads();
  for (std::size_t h = 0; h < hs.size(); ++h) {
    const char* name = PolicyParams::head_names()[h];
    const Json& rows = heads.raw(name);
    std::string at = heads.at(name);
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(hs[h]->rows))
      throw ConfigError(at, "ShapeMismatch: expected " + std::to_string(hs[h]->rows) + " rows");
    for (int rr = 0; rr < hs[h]->rows; ++rr) {
      const Json& row = rows[static_cast<std::size_t>(rr)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(hs[h]->cols))
        throw ConfigError(at + "/" + std::to_string(rr), "ShapeMismatch: expected " + std::to_string(hs[h]->cols) + " columns");
      for (int c = 0; c < hs[h]->cols; ++c) {
        const Json& v = row[static_cast<std::size_t>(c)];
        if (!v.is_number()) throw ConfigError(at + "/" + std::to_string(rr) + "/" + std::to_string(c), "weight must be a number");
        hs[h]->at(rr, c) = v.get<double>();
      }
    }
  }
  heads.finish();
  r.finish();
  return ck;
}

}  // namespace a2seek
