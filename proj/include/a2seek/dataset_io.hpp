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

// Annotation files (temporal, spatial and text labels plus video metadata),
// their validation rules, and conversion into per-window training episodes.
//
// Every file carries "schema": "a2seek-io/1". Fields the loader does not know
// are kept verbatim and written back on serialization.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "a2seek/codes.hpp"
#include "a2seek/geometry.hpp"
#include "a2seek/got_format.hpp"
#include "a2seek/io.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/serialize.hpp"
#include "a2seek/training.hpp"

namespace a2seek {

inline constexpr std::string_view kIoSchema = "a2seek-io/1";

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string pointer, const std::string& what)
      : std::runtime_error("SchemaError at " + (pointer.empty() ? std::string("/") : pointer) + ": " + what),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct VideoMeta {
  std::string video_id;
  SceneCode scene = SceneCode::S00;
  Height height = Height::H0;
  Velocity velocity = Velocity::M0;
  TimeOfDay time_of_day = TimeOfDay::L0;
  Weather weather = Weather::W0;
  FrameDims frame_dims;
  double fps = 30;
  std::optional<int> num_frames;
  Json extra = Json::object();

  friend bool operator==(const VideoMeta&, const VideoMeta&) = default;
};

/// Frames [start_frame, end_frame).
struct TemporalSegment {
  std::string video_id;
  std::optional<std::string> id;
  int start_frame = 0;
  int end_frame = 0;
  ActionCode action = ActionCode::E00;
  Json extra = Json::object();

  bool covers(int frame) const { return frame >= start_frame && frame < end_frame; }
  friend bool operator==(const TemporalSegment&, const TemporalSegment&) = default;
};

struct TrackFrame {
  int frame = 0;
  BoundingBox box;
  friend bool operator==(const TrackFrame&, const TrackFrame&) = default;
};

struct SpatialTrack {
  std::string video_id;
  Json track_id;  // integer or string, kept as written
  ActionCode action = ActionCode::E00;
  std::vector<TrackFrame> frames;
  Json extra = Json::object();

  friend bool operator==(const SpatialTrack&, const SpatialTrack&) = default;
};

/// A text label refers to a frame index or to a segment id.
using TextRef = std::variant<int, std::string>;

struct TextLabel {
  std::string video_id;
  TextRef ref;
  std::string caption;
  std::optional<std::map<Stage, std::string>> stages;
  Json extra = Json::object();

  friend bool operator==(const TextLabel&, const TextLabel&) = default;
};

struct AnnotationSet {
  std::vector<VideoMeta> videos;
  std::vector<TemporalSegment> segments;
  std::vector<SpatialTrack> tracks;
  std::vector<TextLabel> labels;

  const VideoMeta* video(const std::string& id) const {
    for (const auto& v : videos)
      if (v.video_id == id) return &v;
    return nullptr;
  }

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

namespace io_detail {

inline std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }
inline std::string ptr(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

/// Field access for one annotation object; untouched keys become `extra`.
class Fields {
 public:
  Fields(const Json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) throw SchemaError(pointer_, "expected an object");
  }

  const Json& need(const std::string& key) {
    if (!j_.contains(key)) throw SchemaError(ptr(pointer_, key), "missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  const Json* maybe(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }

  std::string str(const std::string& key) {
    const Json& v = need(key);
    if (!v.is_string()) throw SchemaError(ptr(pointer_, key), "expected a string");
    return v.get<std::string>();
  }

  int integer(const std::string& key) {
    const Json& v = need(key);
    if (!v.is_number_integer()) throw SchemaError(ptr(pointer_, key), "expected an integer");
    return v.get<int>();
  }

  std::string at(const std::string& key) const { return ptr(pointer_, key); }

  Json extra() const {
    Json out = Json::object();
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) out[it.key()] = it.value();
    return out;
  }

 private:
  const Json& j_;
  std::string pointer_;
  std::set<std::string> used_;
};

template <class T, class Parse>
T enum_field(Fields& f, const std::string& key, Parse parse, const char* enum_name) {
  std::string s = f.str(key);
  auto v = parse(s);
  if (!v) throw SchemaError(f.at(key), "'" + s + "' is not a " + enum_name);
  return *v;
}

inline BoundingBox box(const Json& j, const std::string& pointer) {
  if (!j.is_array() || j.size() != 4) throw SchemaError(pointer, "box must be [x0, y0, x1, y1]");
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw SchemaError(ptr(pointer, i), "box coordinate must be a number");
    v[i] = j[i].get<double>();
  }
  return {v[0], v[1], v[2], v[3]};
}

inline const Json& array_field(const Json& root, const std::string& key, const std::string& file) {
  if (!root.contains(key)) throw SchemaError(file + ":/" + key, "missing required field");
  const Json& a = root.at(key);
  if (!a.is_array()) throw SchemaError(file + ":/" + key, "expected an array");
  return a;
}

inline Json parse_file(const std::filesystem::path& path) {
  std::string text = read_text_file(path);
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("IoError: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  std::string file = path.filename().string();
  if (!root.is_object()) throw SchemaError(file + ":", "top level must be an object");
  if (!root.contains("schema")) throw SchemaError(file + ":/schema", "missing schema version");
  if (root.at("schema") != kIoSchema)
    throw SchemaError(file + ":/schema", "unsupported schema version " + root.at("schema").dump() + " (expected \"" + std::string(kIoSchema) + "\")");
  return root;
}

}  // namespace io_detail

// ---- parsing ----

inline VideoMeta parse_video(const Json& j, const std::string& pointer) {
  io_detail::Fields f(j, pointer);
  VideoMeta v;
  v.video_id = f.str("video_id");
  v.scene = io_detail::enum_field<SceneCode>(f, "scene", parse_scene_code, "SceneCode (S00..S09)");
  v.height = io_detail::enum_field<Height>(f, "height", parse_height, "Height (H0, H1)");
  v.velocity = io_detail::enum_field<Velocity>(f, "velocity", parse_velocity, "Velocity (M0..M2)");
  v.time_of_day = io_detail::enum_field<TimeOfDay>(f, "time_of_day", parse_time_of_day, "TimeOfDay (L0..L2)");
  v.weather = io_detail::enum_field<Weather>(f, "weather", parse_weather, "Weather (W0, W1, W2, W3, W5, W8)");
  const Json& d = f.need("frame_dims");
  if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number() || !(d[0].get<double>() > 0) ||
      !(d[1].get<double>() > 0))
    throw SchemaError(f.at("frame_dims"), "expected [width, height] with positive entries");
  v.frame_dims = {d[0].get<double>(), d[1].get<double>()};
  const Json& fps = f.need("fps");
  if (!fps.is_number() || !(fps.get<double>() > 0)) throw SchemaError(f.at("fps"), "expected a positive number");
  v.fps = fps.get<double>();
  if (const Json* n = f.maybe("num_frames")) {
    if (!n->is_number_integer() || n->get<int>() < 0) throw SchemaError(f.at("num_frames"), "expected a non-negative integer");
    v.num_frames = n->get<int>();
  }
  v.extra = f.extra();
  return v;
}

inline TemporalSegment parse_segment(const Json& j, const std::string& pointer) {
  io_detail::Fields f(j, pointer);
  TemporalSegment s;
  s.video_id = f.str("video_id");
  if (const Json* id = f.maybe("id")) {
    if (!id->is_string()) throw SchemaError(f.at("id"), "expected a string");
    s.id = id->get<std::string>();
  }
  s.start_frame = f.integer("start_frame");
  s.end_frame = f.integer("end_frame");
  s.action = io_detail::enum_field<ActionCode>(f, "action", parse_action_code, "ActionCode (E00..E20)");
  s.extra = f.extra();
  return s;
}

inline SpatialTrack parse_track(const Json& j, const std::string& pointer) {
  io_detail::Fields f(j, pointer);
  SpatialTrack t;
  t.video_id = f.str("video_id");
  t.track_id = f.need("track_id");
  if (!t.track_id.is_string() && !t.track_id.is_number_integer()) throw SchemaError(f.at("track_id"), "expected an integer or string");
  t.action = io_detail::enum_field<ActionCode>(f, "action", parse_action_code, "ActionCode (E00..E20)");
  const Json& frames = f.need("frames");
  if (!frames.is_array()) throw SchemaError(f.at("frames"), "expected an array");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::string at = io_detail::ptr(f.at("frames"), i);
    const Json& e = frames[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer()) throw SchemaError(at, "expected [frame, [x0, y0, x1, y1]]");
    t.frames.push_back({e[0].get<int>(), io_detail::box(e[1], io_detail::ptr(at, std::size_t{1}))});
  }
  t.extra = f.extra();
  return t;
}

inline TextLabel parse_label(const Json& j, const std::string& pointer) {
  io_detail::Fields f(j, pointer);
  TextLabel l;
  l.video_id = f.str("video_id");
  const Json& ref = f.need("ref");
  if (ref.is_number_integer()) {
    l.ref = ref.get<int>();
  } else if (ref.is_string()) {
    l.ref = ref.get<std::string>();
  } else {
    throw SchemaError(f.at("ref"), "expected a frame index or a segment id");
  }
  l.caption = f.str("caption");
  if (const Json* st = f.maybe("stages")) {
    if (!st->is_object()) throw SchemaError(f.at("stages"), "expected an object");
    std::map<Stage, std::string> stages;
    for (auto it = st->begin(); it != st->end(); ++it) {
      std::string at = io_detail::ptr(f.at("stages"), it.key());
      auto stage = parse_stage_name(it.key());
      if (!stage) throw SchemaError(at, "'" + it.key() + "' is not a Stage (Trigger, Diagnose, Reasoning, Reflection, Seeking)");
      if (!it.value().is_string()) throw SchemaError(at, "expected a string");
      stages[*stage] = it.value().get<std::string>();
    }
    l.stages = std::move(stages);
  }
  l.extra = f.extra();
  return l;
}

/// Parses the four documents. `meta` may be null when the temporal document
/// carries the video list itself.
inline AnnotationSet annotations_from_json(const Json& temporal, const Json& spatial, const Json& text, const Json* meta,
                                           const std::string& temporal_name = "temporal_labels.json",
                                           const std::string& spatial_name = "spatial_labels.json",
                                           const std::string& text_name = "text_labels.json",
                                           const std::string& meta_name = "meta.json") {
  AnnotationSet set;
  auto read_videos = [&](const Json& root, const std::string& file) {
    if (!root.contains("videos")) return;
    const Json& vs = io_detail::array_field(root, "videos", file);
    for (std::size_t i = 0; i < vs.size(); ++i) {
      std::string at = file + ":/videos/" + std::to_string(i);
      VideoMeta v = parse_video(vs[i], at);
      if (set.video(v.video_id)) throw SchemaError(at + "/video_id", "duplicate video_id '" + v.video_id + "'");
      set.videos.push_back(std::move(v));
    }
  };
  if (meta) read_videos(*meta, meta_name);
  read_videos(temporal, temporal_name);
  const Json& segs = io_detail::array_field(temporal, "segments", temporal_name);
  for (std::size_t i = 0; i < segs.size(); ++i) set.segments.push_back(parse_segment(segs[i], temporal_name + ":/segments/" + std::to_string(i)));
  const Json& tracks = io_detail::array_field(spatial, "tracks", spatial_name);
  for (std::size_t i = 0; i < tracks.size(); ++i) set.tracks.push_back(parse_track(tracks[i], spatial_name + ":/tracks/" + std::to_string(i)));
  const Json& labels = io_detail::array_field(text, "labels", text_name);
  for (std::size_t i = 0; i < labels.size(); ++i) set.labels.push_back(parse_label(labels[i], text_name + ":/labels/" + std::to_string(i)));
  return set;
}

/// Errors: IoError (unreadable or not JSON), SchemaError (with a pointer of
/// the form "file:/json/pointer").
inline AnnotationSet load_annotations(const std::filesystem::path& temporal_path, const std::filesystem::path& spatial_path,
                                      const std::filesystem::path& text_path,
                                      const std::optional<std::filesystem::path>& meta_path = std::nullopt) {
  Json temporal = io_detail::parse_file(temporal_path);
  Json spatial = io_detail::parse_file(spatial_path);
  Json text = io_detail::parse_file(text_path);
  std::optional<Json> meta;
  if (meta_path) meta = io_detail::parse_file(*meta_path);
  return annotations_from_json(temporal, spatial, text, meta ? &*meta : nullptr, temporal_path.filename().string(),
                               spatial_path.filename().string(), text_path.filename().string(),
                               meta_path ? meta_path->filename().string() : "meta.json");
}

// ---- serialization ----

namespace io_detail {

inline Json with_extra(Json j, const Json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

}  // namespace io_detail

inline Json to_json(const VideoMeta& v) {
  Json j;
  j["video_id"] = v.video_id;
  j["scene"] = to_string(v.scene);
  j["height"] = to_string(v.height);
  j["velocity"] = to_string(v.velocity);
  j["time_of_day"] = to_string(v.time_of_day);
  j["weather"] = to_string(v.weather);
  j["frame_dims"] = Json::array({v.frame_dims.width, v.frame_dims.height});
  j["fps"] = v.fps;
  if (v.num_frames) j["num_frames"] = *v.num_frames;
  return io_detail::with_extra(std::move(j), v.extra);
}

inline Json to_json(const TemporalSegment& s) {
  Json j;
  j["video_id"] = s.video_id;
  if (s.id) j["id"] = *s.id;
  j["start_frame"] = s.start_frame;
  j["end_frame"] = s.end_frame;
  j["action"] = to_string(s.action);
  return io_detail::with_extra(std::move(j), s.extra);
}

inline Json to_json(const SpatialTrack& t) {
  Json j;
  j["video_id"] = t.video_id;
  j["track_id"] = t.track_id;
  j["action"] = to_string(t.action);
  j["frames"] = Json::array();
  for (const auto& f : t.frames) j["frames"].push_back(Json::array({f.frame, box_to_json(f.box)}));
  return io_detail::with_extra(std::move(j), t.extra);
}

inline Json to_json(const TextLabel& l) {
  Json j;
  j["video_id"] = l.video_id;
  if (std::holds_alternative<int>(l.ref)) j["ref"] = std::get<int>(l.ref);
  else j["ref"] = std::get<std::string>(l.ref);
  j["caption"] = l.caption;
  if (l.stages) {
    Json st = Json::object();
    for (const auto& [stage, text] : *l.stages) st[std::string(stage_name(stage))] = text;
    j["stages"] = std::move(st);
  }
  return io_detail::with_extra(std::move(j), l.extra);
}

struct AnnotationDocuments {
  Json temporal;
  Json spatial;
  Json text;
};

/// Videos are written into the temporal document.
inline AnnotationDocuments serialize_annotations(const AnnotationSet& set) {
  AnnotationDocuments d;
  d.temporal["schema"] = kIoSchema;
  d.temporal["videos"] = Json::array();
  for (const auto& v : set.videos) d.temporal["videos"].push_back(to_json(v));
  d.temporal["segments"] = Json::array();
  for (const auto& s : set.segments) d.temporal["segments"].push_back(to_json(s));
  d.spatial["schema"] = kIoSchema;
  d.spatial["tracks"] = Json::array();
  for (const auto& t : set.tracks) d.spatial["tracks"].push_back(to_json(t));
  d.text["schema"] = kIoSchema;
  d.text["labels"] = Json::array();
  for (const auto& l : set.labels) d.text["labels"].push_back(to_json(l));
  return d;
}

inline void save_annotations(const AnnotationSet& set, const std::filesystem::path& dir) {
  AnnotationDocuments d = serialize_annotations(set);
  write_text_file(dir / "temporal_labels.json", d.temporal.dump(2) + "\n");
  write_text_file(dir / "spatial_labels.json", d.spatial.dump(2) + "\n");
  write_text_file(dir / "text_labels.json", d.text.dump(2) + "\n");
}

// ---- validation ----

enum class ViolationKind { TemporalOrder, BoxBounds, TrackOrder, DanglingRef, UncoveredTrack };

inline std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::TemporalOrder: return "TemporalOrder";
    case ViolationKind::BoxBounds: return "BoxBounds";
    case ViolationKind::TrackOrder: return "TrackOrder";
    case ViolationKind::DanglingRef: return "DanglingRef";
    case ViolationKind::UncoveredTrack: return "UncoveredTrack";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::string where;  // e.g. "segments/3"
  std::string message;
};

inline std::vector<Violation> validate_annotations(const AnnotationSet& set) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind k, std::string where, std::string msg) { out.push_back({k, std::move(where), std::move(msg)}); };

  for (std::size_t i = 0; i < set.segments.size(); ++i) {
    const auto& s = set.segments[i];
    std::string where = "segments/" + std::to_string(i);
    if (!set.video(s.video_id)) add(ViolationKind::DanglingRef, where, "unknown video_id '" + s.video_id + "'");
    if (s.start_frame < 0 || s.start_frame >= s.end_frame)
      add(ViolationKind::TemporalOrder, where, "need 0 <= start_frame < end_frame");
  }

  for (std::size_t i = 0; i < set.tracks.size(); ++i) {
    const auto& t = set.tracks[i];
    std::string where = "tracks/" + std::to_string(i);
    const VideoMeta* v = set.video(t.video_id);
    if (!v) add(ViolationKind::DanglingRef, where, "unknown video_id '" + t.video_id + "'");
    for (std::size_t k = 1; k < t.frames.size(); ++k) {
      if (t.frames[k].frame <= t.frames[k - 1].frame) {
        add(ViolationKind::TrackOrder, where + "/frames/" + std::to_string(k), "frame indices must strictly increase");
        break;
      }
    }
    if (v) {
      for (std::size_t k = 0; k < t.frames.size(); ++k) {
        const auto& b = t.frames[k].box;
        if (!b.valid() || !b.within(v->frame_dims.width, v->frame_dims.height)) {
          add(ViolationKind::BoxBounds, where + "/frames/" + std::to_string(k), "box outside frame or inverted");
          break;
        }
      }
    }
    for (const auto& f : t.frames) {
      bool covered = false;
      for (const auto& s : set.segments)
        covered = covered || (s.video_id == t.video_id && s.action == t.action && s.covers(f.frame));
      if (!covered) {
        add(ViolationKind::UncoveredTrack, where,
            "frame " + std::to_string(f.frame) + " is not inside a " + to_string(t.action) + " segment");
        break;
      }
    }
  }

  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    const auto& l = set.labels[i];
    std::string where = "labels/" + std::to_string(i);
    const VideoMeta* v = set.video(l.video_id);
    if (!v) {
      add(ViolationKind::DanglingRef, where, "unknown video_id '" + l.video_id + "'");
      continue;
    }
    if (std::holds_alternative<int>(l.ref)) {
      int f = std::get<int>(l.ref);
      if (f < 0 || (v->num_frames && f >= *v->num_frames))
        add(ViolationKind::DanglingRef, where, "frame " + std::to_string(f) + " outside the video");
    } else {
      const auto& id = std::get<std::string>(l.ref);
      bool found = false;
      for (const auto& s : set.segments) found = found || (s.video_id == l.video_id && s.id && *s.id == id);
      if (!found) add(ViolationKind::DanglingRef, where, "no segment with id '" + id + "'");
    }
  }
  return out;
}

// ---- episodes ----

struct EpisodeConfig {
  int window = 4;
  int stride = 4;
  double seek_area_ratio = 0.004;  // boxes below this share of the frame need a closer look
  double seek_expand = 2.0;        // seek region = tiny box scaled about its centre, clipped

  void check() const {
    if (window < 1 || stride < 1) throw std::invalid_argument("EpisodeConfig: window and stride must be >= 1");
    if (!(seek_area_ratio >= 0) || !(seek_expand >= 1)) throw std::invalid_argument("EpisodeConfig: bad seek settings");
  }
};

struct Episode {
  std::string video_id;
  SceneCode scene = SceneCode::S00;
  int start_frame = 0;  // [start_frame, end_frame)
  int end_frame = 0;
  GroundTruth gt;
  std::map<Stage, std::string> stage_texts;  // <NULL> entries are dropped
  HeadMask mask;
};

namespace io_detail {

inline int video_length(const AnnotationSet& set, const VideoMeta& v) {
  if (v.num_frames) return *v.num_frames;
  int n = 0;
  for (const auto& s : set.segments)
    if (s.video_id == v.video_id) n = std::max(n, s.end_frame);
  for (const auto& t : set.tracks)
    if (t.video_id == v.video_id)
      for (const auto& f : t.frames) n = std::max(n, f.frame + 1);
  for (const auto& l : set.labels)
    if (l.video_id == v.video_id && std::holds_alternative<int>(l.ref)) n = std::max(n, std::get<int>(l.ref) + 1);
  return n;
}

inline BoundingBox expand_clip(const BoundingBox& b, double factor, const FrameDims& dims) {
  double cx = (b.x_min + b.x_max) / 2, cy = (b.y_min + b.y_max) / 2;
  double hw = b.width() * factor / 2, hh = b.height() * factor / 2;
  return {std::max(0.0, cx - hw), std::max(0.0, cy - hh), std::min(dims.width, cx + hw), std::min(dims.height, cy + hh)};
}

}  // namespace io_detail

/// One episode per window of each video. The class is the action of the
/// segment overlapping the window most (earliest listed wins ties; E00 when
/// none), boxes come from same-action tracks at their first frame inside the
/// window, and stage texts from labels that point into the window or at the
/// chosen segment.
inline std::vector<Episode> to_episodes(const AnnotationSet& set, const EpisodeConfig& cfg = {}) {
  cfg.check();
  std::vector<Episode> out;
  for (const auto& v : set.videos) {
    const int length = io_detail::video_length(set, v);
    for (int start = 0; start < length; start += cfg.stride) {
      const int end = start + cfg.window;
      Episode ep;
      ep.video_id = v.video_id;
      ep.scene = v.scene;
      ep.start_frame = start;
      ep.end_frame = end;
      ep.gt.frame_dims = v.frame_dims;
      const TemporalSegment* seg = nullptr;
      int best = 0;
      for (const auto& s : set.segments) {
        if (s.video_id != v.video_id) continue;
        int overlap = std::min(end, s.end_frame) - std::max(start, s.start_frame);
        if (overlap > best) {
          best = overlap;
          seg = &s;
        }
      }
      ep.gt.class_code = seg ? seg->action : ActionCode::E00;
      if (seg && is_abnormal(seg->action)) {
        for (const auto& t : set.tracks) {
          if (t.video_id != v.video_id || t.action != seg->action) continue;
          for (const auto& f : t.frames) {
            if (f.frame >= start && f.frame < end) {
              ep.gt.boxes.push_back(f.box);
              break;
            }
          }
        }
      }
      const double frame_area = v.frame_dims.area();
      for (const auto& b : ep.gt.boxes) {
        if (b.area() / frame_area < cfg.seek_area_ratio) {
          ep.gt.seek_required = true;
          ep.gt.seek_region = io_detail::expand_clip(b, cfg.seek_expand, v.frame_dims);
          break;
        }
      }
      for (const auto& l : set.labels) {
        if (l.video_id != v.video_id || !l.stages) continue;
        bool hit = std::holds_alternative<int>(l.ref)
                       ? (std::get<int>(l.ref) >= start && std::get<int>(l.ref) < end)
                       : (seg && seg->id && *seg->id == std::get<std::string>(l.ref));
        if (!hit) continue;
        for (const auto& [stage, text] : *l.stages)
          if (text != kNullToken && !ep.stage_texts.count(stage)) ep.stage_texts[stage] = text;
      }
      bool reasoning = false;
      for (Stage s : {Stage::Trigger, Stage::Diagnose, Stage::Reasoning, Stage::Reflection}) reasoning = reasoning || ep.stage_texts.count(s);
      bool seeking = ep.stage_texts.count(Stage::Seeking) > 0;
      ep.mask = HeadMask{seeking, seeking && ep.gt.seek_required, true, !ep.gt.boxes.empty(), reasoning};
      out.push_back(std::move(ep));
    }
  }
  return out;
}

}  // namespace a2seek
