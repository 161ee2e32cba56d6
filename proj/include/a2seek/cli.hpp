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

// Command-line front end: gen-data, train, eval, reward, inspect, report.
//
// Exit codes: 0 success, 1 validation failure (bad config, schema, missing
// checkpoint, unreadable input), 2 usage error. Each command checks its inputs
// before writing anything and finishes by writing run-manifest.json.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "a2seek/actions.hpp"
#include "a2seek/eval.hpp"
#include "a2seek/experiments.hpp"
#include "a2seek/got_format.hpp"
#include "a2seek/io.hpp"
#include "a2seek/policy.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/seekenv.hpp"
#include "a2seek/serialize.hpp"
#include "a2seek/training.hpp"

namespace a2seek {

class CheckpointMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run reads from its config file. Training fields sit at the
/// top level; generator and reward settings in "gen" and "reward".
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir;
  GenParams gen;
  RewardConfig reward;
  TrainConfig train;

  Json to_json() const {
    Json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    Json fields = train_fields_to_json(train);
    for (auto it = fields.begin(); it != fields.end(); ++it) j[it.key()] = it.value();
    j["gen"] = a2seek::to_json(gen);
    j["reward"] = a2seek::to_json(reward);
    return j;
  }
};

inline RunConfig run_config_from_json(const Json& j) {
  JsonReader r(j, "");
  RunConfig c;
  const Json& seed = r.raw("seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    throw ConfigError("/seed", "must be a non-negative integer");
  c.seed = seed.get<std::uint64_t>();
  r.opt("out_dir", c.out_dir);
  if (r.has("gen")) c.gen = gen_params_from_json(r.raw("gen"), "/gen");
  if (r.has("reward")) c.reward = reward_config_from_json(r.raw("reward"), "/reward");
  read_train_fields(r, c.train);
  r.finish();
  c.train.seed = c.seed;
  c.train.gen = c.gen;
  c.train.reward = c.reward;
  return c;
}

/// Errors: IoError, ConfigError (with the key's JSON pointer).
inline RunConfig load_config(const std::filesystem::path& path) {
  std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

/// 64-bit FNV-1a, used for config and file hashes in manifests.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace cli_detail {

inline std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::get("a2seek");
    if (!l) l = spdlog::stderr_color_mt("a2seek");
    l->set_pattern("[%l] %v");
    return l;
  }();
  const char* env = std::getenv("A2SEEK_LOG");
  std::string level = env ? env : "warn";
  if (level == "error") log->set_level(spdlog::level::err);
  else if (level == "info") log->set_level(spdlog::level::info);
  else if (level == "debug") log->set_level(spdlog::level::debug);
  else log->set_level(spdlog::level::warn);
  return log;
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  Json config;
  std::uint64_t seed = 0;
  Json streams = Json::object();
  std::vector<std::filesystem::path> files;
};

/// File list entries are relative to out_dir and carry a content hash.
inline void write_manifest(const std::filesystem::path& out_dir, const Manifest& m) {
  Json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["config"] = m.config;
  j["config_hash"] = hex64(fnv1a(m.config.dump()));
  j["seed"] = m.seed;
  j["streams"] = m.streams;
  Json files = Json::array();
  for (const auto& f : m.files)
    files.push_back({{"path", std::filesystem::relative(f, out_dir).generic_string()}, {"fnv1a", hex64(fnv1a(read_text_file(f)))}});
  j["files"] = std::move(files);
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["volatile"] = {{"created_utc", stamp}};
  write_text_file(out_dir / "run-manifest.json", j.dump(2) + "\n");
}

inline std::vector<std::uint64_t> data_seeds(std::uint64_t seed, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(derive_seed(derive_seed(seed, 0xDA7AULL), static_cast<std::uint64_t>(i)));
  return out;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CheckpointMissing("CheckpointMissing: '" + path.string() + "' does not exist");
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", "checkpoint is not valid JSON: " + std::string(e.what()));
  }
  return checkpoint_from_json(j);
}

inline GenParams load_gen_params(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", "params file is not valid JSON: " + std::string(e.what()));
  }
  return gen_params_from_json(j);
}

inline bool same_dims(const GenParams& a, const GenParams& b) {
  return a.coarse_dim == b.coarse_dim && a.pixel_dim == b.pixel_dim && a.classes == b.classes;
}

// ---- commands ----

inline int cmd_gen_data(std::uint64_t seed, int count, const std::filesystem::path& out, const std::string& params_path,
                        bool ambiguous, const std::vector<std::string>& argv, std::ostream&) {
  if (count < 1) throw ConfigError("/count", "must be >= 1");
  GenParams gen = params_path.empty() ? GenParams{} : load_gen_params(params_path);
  if (ambiguous) gen = ambiguous_heavy(gen);
  std::string lines;
  for (std::uint64_t s : data_seeds(seed, count)) lines += scene_record(generate_scene(s, gen)).dump() + "\n";
  Manifest m{"gen-data", argv, Json{{"seed", seed}, {"count", count}, {"gen", to_json(gen)}}, seed, Json::object(), {}};
  m.streams["scenes"] = derive_seed(seed, 0xDA7AULL);
  m.files = {out / "gen_params.json", out / "scenes.jsonl"};
  write_text_file(m.files[0], to_json(gen).dump(2) + "\n");
  write_text_file(m.files[1], lines);
  write_manifest(out, m);
  logger()->info("wrote {} scenes to {}", count, out.string());
  return 0;
}

inline int cmd_train(const std::string& stage, const std::filesystem::path& config_path, std::filesystem::path out,
                     const std::string& init_path, const std::vector<std::string>& argv, std::ostream&) {
  RunConfig cfg = load_config(config_path);
  if (out.empty()) out = cfg.out_dir;
  if (out.empty()) throw ConfigError("/out_dir", "no output directory (use --out or out_dir)");
  TrainConfig tc = cfg.train;
  tc.stage = stage == "sft" ? StageKind::Sft : StageKind::Agrpo;
  std::optional<Checkpoint> init;
  if (!init_path.empty()) init = load_checkpoint(init_path);
  if (tc.stage == StageKind::Agrpo && !init)
    throw CheckpointMissing("CheckpointMissing: train --stage agrpo needs the SFT checkpoint via --init");
  if (init && !same_dims(init->gen, cfg.gen)) throw ConfigError("/gen", "ShapeMismatch: checkpoint was trained with other dims or classes");
  tc.check();

  Manifest m{"train", argv, cfg.to_json(), cfg.seed, Json::object(), {}};
  StageResult res;
  if (tc.stage == StageKind::Sft) {
    logger()->info("sft: {} scenes, {} epochs", tc.train_scenes, tc.effective_epochs());
    res = init ? run_sft(tc, init->params) : run_sft(tc);
    m.streams = {{"sft_scenes", derive_seed(tc.seed, kStreamSftScenes)},
                 {"sft_style", derive_seed(tc.seed, kStreamSftStyle)},
                 {"sft_order", derive_seed(tc.seed, kStreamSftOrder)}};
  } else {
    logger()->info("agrpo: {} steps, K={}, beta={}", tc.effective_steps(), tc.group_size, tc.kl_beta);
    res = run_agrpo(tc, init->params);
    m.streams = {{"rl_scenes", derive_seed(tc.seed, kStreamRlScenes)},
                 {"rl_order", derive_seed(tc.seed, kStreamRlOrder)},
                 {"rl_rollouts", derive_seed(tc.seed, kStreamRlRollouts)}};
  }
  m.files = {out / "checkpoint.json", out / "train_log.jsonl"};
  write_text_file(m.files[0], checkpoint_to_json(res.params, tc.gen).dump() + "\n");
  write_text_file(m.files[1], res.log.to_jsonl());
  write_manifest(out, m);
  return 0;
}

inline int cmd_eval(const std::filesystem::path& ckpt_path, const std::filesystem::path& data, const std::filesystem::path& report,
                    const std::vector<std::string>& argv, std::ostream&) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  GenParams gen = load_gen_params(data / "gen_params.json");
  if (!same_dims(ck.gen, gen)) throw ConfigError("/gen", "ShapeMismatch: data and checkpoint disagree on dims or classes");
  std::string text = read_text_file(data / "scenes.jsonl");
  std::vector<SceneSpec> scenes;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = "scenes.jsonl line " + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ConfigError(where, "invalid JSON");
    }
    if (!j.contains("seed") || !j["seed"].is_number_unsigned()) throw ConfigError(where + "/seed", "missing scene seed");
    SceneSpec scene = generate_scene(j["seed"].get<std::uint64_t>(), gen);
    if (scene_record(scene) != j) throw ConfigError(where, "record does not match the scene its seed generates");
    scenes.push_back(std::move(scene));
  }
  if (scenes.empty()) throw ConfigError("scenes.jsonl", "no scenes");
  std::vector<EvalRecord> records;
  for (const auto& s : scenes) records.push_back(policy_record(ck.params, s, gen, RewardConfig{}));
  Manifest m{"eval", argv, Json{{"ckpt_fnv1a", hex64(fnv1a(read_text_file(ckpt_path)))}, {"data", to_json(gen)}}, 0, Json::object(), {}};
  m.files = make_report(records, report);
  m.files.push_back(report / "records.jsonl");
  write_text_file(m.files.back(), records_to_jsonl(records));
  write_manifest(report, m);
  return 0;
}

inline int cmd_reward(const std::filesystem::path& transcript, const std::filesystem::path& gt_path, std::ostream& out) {
  std::string text = read_text_file(transcript);
  Json gj;
  try {
    gj = Json::parse(read_text_file(gt_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", "ground truth is not valid JSON: " + std::string(e.what()));
  }
  GroundTruth gt = ground_truth_from_json(gj);
  out << to_json(total_reward(text, gt, RewardConfig{})).dump(2) << "\n";
  return 0;
}

inline int cmd_inspect(std::uint64_t scene_seed, const std::string& params_path, std::ostream& out) {
  GenParams gen = params_path.empty() ? GenParams{} : load_gen_params(params_path);
  SceneSpec scene = generate_scene(scene_seed, gen);
  Json j = scene_record(scene);
  std::vector<double> coarse = coarse_means(scene);
  Json grid = Json::array();
  for (int r = 0; r < gen.coarse_dim; ++r) {
    Json row = Json::array();
    for (int c = 0; c < gen.coarse_dim; ++c) row.push_back(coarse[static_cast<std::size_t>(r * gen.coarse_dim + c)]);
    grid.push_back(row);
  }
  j["coarse_means"] = grid;
  j["posterior_coarse"] = class_posterior(observe(scene, std::nullopt), gen);
  if (scene.gt_seek_region) j["posterior_after_seek"] = class_posterior(observe(scene, scene.gt_seek_region), gen);
  InformationAccount acc = information_account(scene, scene.gt_seek_region, gen);
  j["information_bits"] = {{"required", acc.required}, {"input", acc.input}, {"seek", acc.seek}, {"total", acc.total}};
  StructuredAction best = oracle_action(scene, gen);
  j["oracle_transcript"] = render_transcript(render_action(best, scene));
  out << j.dump(2) << "\n";
  return 0;
}

inline int cmd_report(const std::filesystem::path& records_path, const std::filesystem::path& out,
                      const std::vector<std::string>& argv) {
  std::vector<EvalRecord> records = records_from_jsonl(read_text_file(records_path));
  if (records.empty()) throw ConfigError("", "no records");
  Manifest m{"report", argv, Json{{"records_fnv1a", hex64(fnv1a(read_text_file(records_path)))}}, 0, Json::object(), {}};
  m.files = make_report(records, out);
  write_manifest(out, m);
  return 0;
}

}  // namespace cli_detail

/// Runs one command; args exclude the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"a2seek: seek-then-answer toy pipeline"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int count = 0;
  std::string out_dir, params, stage, config, init, ckpt, data, report, transcript, gt, records;
  bool ambiguous = false;

  auto* gen = app.add_subcommand("gen-data", "generate seeded scenes");
  gen->add_option("--seed", seed)->required();
  gen->add_option("--count", count)->required();
  gen->add_option("--out", out_dir)->required();
  gen->add_option("--params", params);
  gen->add_flag("--ambiguous-heavy", ambiguous, "draw mostly from the ambiguous pair");

  auto* train = app.add_subcommand("train", "run one training stage");
  train->add_option("--stage", stage)->required()->check(CLI::IsMember({"sft", "agrpo"}));
  train->add_option("--config", config)->required();
  train->add_option("--out", out_dir);
  train->add_option("--init", init, "starting checkpoint (the reference policy for agrpo)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on generated scenes");
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--data", data)->required();
  ev->add_option("--report", report)->required();

  auto* rw = app.add_subcommand("reward", "score a transcript against ground truth");
  rw->add_option("--transcript", transcript)->required();
  rw->add_option("--gt", gt)->required();

  auto* insp = app.add_subcommand("inspect", "describe one scene");
  insp->add_option("--scene-seed", seed)->required();
  insp->add_option("--params", params);

  auto* rep = app.add_subcommand("report", "metrics from a records file");
  rep->add_option("--records", records)->required();
  rep->add_option("--out", out_dir)->required();

  std::vector<std::string> argv_store = {"a2seek"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen) return cli_detail::cmd_gen_data(seed, count, out_dir, params, ambiguous, args, out);
    if (*train) return cli_detail::cmd_train(stage, config, out_dir, init, args, out);
    if (*ev) return cli_detail::cmd_eval(ckpt, data, report, args, out);
    if (*rw) return cli_detail::cmd_reward(transcript, gt, out);
    if (*insp) return cli_detail::cmd_inspect(seed, params, out);
    if (*rep) return cli_detail::cmd_report(records, out_dir, args);
  } catch (const CheckpointMissing& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace a2seek
