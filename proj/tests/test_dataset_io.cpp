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

#include <filesystem>

#include "a2seek/dataset_io.hpp"

namespace a2seek {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = A2SEEK_FIXTURES;

AnnotationSet load_dir(const fs::path& dir) {
  return load_annotations(dir / "temporal_labels.json", dir / "spatial_labels.json", dir / "text_labels.json");
}

AnnotationSet minimal() { return load_dir(kFixtures / "minimal"); }

std::vector<ViolationKind> kinds(const AnnotationSet& set) {
  std::vector<ViolationKind> out;
  for (const auto& v : validate_annotations(set)) out.push_back(v.kind);
  return out;
}

TEST(DatasetIo, LoadsMinimalFixture) {
  AnnotationSet set = minimal();
  ASSERT_EQ(set.videos.size(), 1u);
  ASSERT_EQ(set.segments.size(), 1u);
  ASSERT_EQ(set.tracks.size(), 1u);
  ASSERT_EQ(set.labels.size(), 1u);

  const VideoMeta& v = set.videos[0];
  EXPECT_EQ(v.video_id, "v001");
  EXPECT_EQ(v.scene, SceneCode::S07);
  EXPECT_EQ(v.height, Height::H1);
  EXPECT_EQ(v.time_of_day, TimeOfDay::L1);
  EXPECT_DOUBLE_EQ(v.frame_dims.width, 1920);
  EXPECT_EQ(v.num_frames, 32);
  EXPECT_EQ(v.extra, Json({{"camera", "dji-m3"}}));

  EXPECT_EQ(set.segments[0].id, "seg0");
  EXPECT_EQ(set.segments[0].action, ActionCode::E18);
  EXPECT_EQ(set.tracks[0].frames.size(), 6u);
  EXPECT_EQ(set.tracks[0].track_id, Json(1));
  EXPECT_EQ(std::get<std::string>(set.labels[0].ref), "seg0");
  ASSERT_TRUE(set.labels[0].stages);
  EXPECT_EQ(set.labels[0].stages->at(Stage::Seeking), kNullToken);
}

TEST(DatasetIo, BadActionCodeNamesEnumAndPointer) {
  try {
    load_dir(kFixtures / "bad_code");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.pointer(), "temporal_labels.json:/segments/0/action");
    EXPECT_NE(std::string(e.what()).find("ActionCode"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("E21"), std::string::npos);
  }
}

TEST(DatasetIo, MissingSchemaAndMissingFile) {
  Json t = Json::parse(read_text_file(kFixtures / "minimal" / "temporal_labels.json"));
  t.erase("schema");
  fs::path dir = fs::temp_directory_path() / "a2seek_test_io_schema";
  fs::create_directories(dir);
  write_text_file(dir / "temporal_labels.json", t.dump());
  fs::copy_file(kFixtures / "minimal" / "spatial_labels.json", dir / "spatial_labels.json", fs::copy_options::overwrite_existing);
  fs::copy_file(kFixtures / "minimal" / "text_labels.json", dir / "text_labels.json", fs::copy_options::overwrite_existing);
  try {
    load_dir(dir);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.pointer(), "temporal_labels.json:/schema");
  }

  t["schema"] = "a2seek-io/2";
  write_text_file(dir / "temporal_labels.json", t.dump());
  EXPECT_THROW(load_dir(dir), SchemaError);

  write_text_file(dir / "temporal_labels.json", "{ not json");
  EXPECT_THROW(load_dir(dir), IoError);

  fs::remove(dir / "temporal_labels.json");
  EXPECT_THROW(load_dir(dir), IoError);
  fs::remove_all(dir);
}

TEST(DatasetIo, FieldErrorsCarryPointers) {
  Json t = Json::parse(read_text_file(kFixtures / "minimal" / "temporal_labels.json"));
  Json s = Json::parse(read_text_file(kFixtures / "minimal" / "spatial_labels.json"));
  Json x = Json::parse(read_text_file(kFixtures / "minimal" / "text_labels.json"));

  auto pointer_of = [&](const Json& tt, const Json& ss, const Json& xx) -> std::string {
    try {
      annotations_from_json(tt, ss, xx, nullptr);
    } catch (const SchemaError& e) {
      return e.pointer();
    }
    return "";
  };
  Json t2 = t;
  t2["videos"][0].erase("fps");
  EXPECT_EQ(pointer_of(t2, s, x), "temporal_labels.json:/videos/0/fps");
  Json t3 = t;
  t3["videos"][0]["weather"] = "W4";
  EXPECT_EQ(pointer_of(t3, s, x), "temporal_labels.json:/videos/0/weather");
  Json s2 = s;
  s2["tracks"][0]["frames"][3][1] = Json::array({1, 2, 3});
  EXPECT_EQ(pointer_of(t, s2, x), "spatial_labels.json:/tracks/0/frames/3/1");
  Json x2 = x;
  x2["labels"][0]["stages"]["Summary"] = "x";
  EXPECT_EQ(pointer_of(t, s, x2), "text_labels.json:/labels/0/stages/Summary");
  Json t4 = t;
  t4["videos"].push_back(t["videos"][0]);
  EXPECT_EQ(pointer_of(t4, s, x), "temporal_labels.json:/videos/1/video_id");
  EXPECT_EQ(pointer_of(t, s, x), "");
}

TEST(DatasetIo, CleanFixtureValidates) { EXPECT_TRUE(validate_annotations(minimal()).empty()); }

TEST(DatasetIo, EachViolationKindDetected) {
  {
    AnnotationSet set = minimal();
    set.segments[0].end_frame = set.segments[0].start_frame;
    // The track is now uncovered as well.
    EXPECT_EQ(kinds(set), (std::vector{ViolationKind::TemporalOrder, ViolationKind::UncoveredTrack}));
  }
  {
    AnnotationSet set = minimal();
    set.tracks[0].frames[2].box.x_max = 1921;
    EXPECT_EQ(kinds(set), std::vector{ViolationKind::BoxBounds});
  }
  {
    AnnotationSet set = minimal();
    set.tracks[0].frames[3].frame = 14;
    EXPECT_EQ(kinds(set), std::vector{ViolationKind::TrackOrder});
  }
  {
    AnnotationSet set = minimal();
    set.labels[0].ref = std::string("seg9");
    EXPECT_EQ(kinds(set), std::vector{ViolationKind::DanglingRef});
  }
  {
    AnnotationSet set = minimal();
    set.labels[0].ref = 32;
    EXPECT_EQ(kinds(set), std::vector{ViolationKind::DanglingRef});
  }
  {
    AnnotationSet set = minimal();
    set.tracks[0].frames.push_back({24, set.tracks[0].frames.back().box});
    EXPECT_EQ(kinds(set), std::vector{ViolationKind::UncoveredTrack});
  }
  {
    AnnotationSet set = minimal();
    set.tracks[0].action = ActionCode::E06;
    EXPECT_EQ(kinds(set), std::vector{ViolationKind::UncoveredTrack});
  }
}

TEST(DatasetIo, SerializeRoundTrip) {
  AnnotationSet set = minimal();
  set.labels.push_back({"v001", 5, "a quiet street", std::nullopt, Json({{"rater", 3}})});
  AnnotationDocuments d = serialize_annotations(set);
  EXPECT_EQ(annotations_from_json(d.temporal, d.spatial, d.text, nullptr), set);

  fs::path dir = fs::temp_directory_path() / "a2seek_test_io_roundtrip";
  fs::create_directories(dir);
  save_annotations(set, dir);
  EXPECT_EQ(load_dir(dir), set);
  save_annotations(load_dir(dir), dir / "again");
  EXPECT_EQ(read_text_file(dir / "temporal_labels.json"), read_text_file(dir / "again" / "temporal_labels.json"));
  fs::remove_all(dir);
}

TEST(DatasetIo, MetaFileSuppliesVideos) {
  Json t = Json::parse(read_text_file(kFixtures / "minimal" / "temporal_labels.json"));
  Json s = Json::parse(read_text_file(kFixtures / "minimal" / "spatial_labels.json"));
  Json x = Json::parse(read_text_file(kFixtures / "minimal" / "text_labels.json"));
  Json meta = {{"schema", kIoSchema}, {"videos", t["videos"]}};
  t.erase("videos");
  EXPECT_EQ(annotations_from_json(t, s, x, &meta), minimal());
}

TEST(DatasetIo, EpisodesCoverEveryWindowOnce) {
  std::vector<Episode> eps = to_episodes(minimal());
  ASSERT_EQ(eps.size(), 8u);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(eps[i].start_frame, static_cast<int>(4 * i));
    EXPECT_EQ(eps[i].end_frame, static_cast<int>(4 * i + 4));
    EXPECT_EQ(eps[i].scene, SceneCode::S07);
  }
  std::vector<ActionCode> classes;
  for (const auto& e : eps) classes.push_back(e.gt.class_code);
  using enum ActionCode;
  EXPECT_EQ(classes, (std::vector{E00, E00, E18, E18, E18, E18, E00, E00}));

  EpisodeConfig overlap;
  overlap.window = 8;
  overlap.stride = 2;
  EXPECT_EQ(to_episodes(minimal(), overlap).size(), 16u);
}

TEST(DatasetIo, EpisodeContents) {
  std::vector<Episode> eps = to_episodes(minimal());
  const Episode& e = eps[2];  // frames [8, 12)
  EXPECT_EQ(e.gt.class_code, ActionCode::E18);
  ASSERT_EQ(e.gt.boxes.size(), 1u);
  EXPECT_EQ(e.gt.boxes[0], (BoundingBox{400, 300, 500, 420}));
  EXPECT_FALSE(e.gt.seek_required);
  EXPECT_TRUE(e.gt.consistent());
  EXPECT_EQ(e.stage_texts.size(), 3u);
  EXPECT_FALSE(e.stage_texts.count(Stage::Reflection));
  EXPECT_FALSE(e.stage_texts.count(Stage::Seeking));
  EXPECT_EQ(e.stage_texts.at(Stage::Trigger), "two people close together near the entrance");
  EXPECT_TRUE(e.mask.class_code);
  EXPECT_TRUE(e.mask.answer_cell);
  EXPECT_TRUE(e.mask.length);
  EXPECT_FALSE(e.mask.seek);

  EXPECT_EQ(eps[3].gt.boxes[0], (BoundingBox{404, 300, 504, 420}));

  const Episode& quiet = eps[0];
  EXPECT_EQ(quiet.gt.class_code, ActionCode::E00);
  EXPECT_TRUE(quiet.gt.boxes.empty());
  EXPECT_TRUE(quiet.stage_texts.empty());
  EXPECT_FALSE(quiet.mask.answer_cell);
  EXPECT_FALSE(quiet.mask.length);
}

TEST(DatasetIo, TinyBoxNeedsSeeking) {
  AnnotationSet set = minimal();
  // 40 x 40 = 1600 px, under 0.004 of 1920 x 1080 (8294.4).
  set.tracks[0].frames[0].box = {10, 20, 50, 60};
  (*set.labels[0].stages)[Stage::Seeking] = "zoom on the pair";
  std::vector<Episode> eps = to_episodes(set);
  const Episode& e = eps[2];
  EXPECT_TRUE(e.gt.seek_required);
  ASSERT_TRUE(e.gt.seek_region);
  EXPECT_EQ(*e.gt.seek_region, (BoundingBox{0, 0, 70, 80}));
  EXPECT_TRUE(e.mask.seek);
  EXPECT_TRUE(e.mask.seek_cell);
  EXPECT_FALSE(eps[3].gt.seek_required);
  EXPECT_TRUE(eps[3].mask.seek);
  EXPECT_FALSE(eps[3].mask.seek_cell);
}

TEST(DatasetIo, BadEpisodeConfigRejected) {
  EpisodeConfig cfg;
  cfg.stride = 0;
  EXPECT_THROW(to_episodes(minimal(), cfg), std::invalid_argument);
}

}  // namespace
}  // namespace a2seek
