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

// Structured reasoning transcripts:
//
//   transcript  := think_block seek_block? answer_block?
//   think_block := "<think>" stage* "</think>"
//   stage       := stage_tag text | text
//   seek_block  := "<seeking>" box "</seeking>"
//   answer_block:= "<answer>" class_code (";" box ("," box)*)? "</answer>"
//   box         := "[" int "," int "," int "," int "]"
//
// Blocks may be separated by ASCII whitespace; rendering emits none. The
// literal "<NULL>" may stand in for any stage text, box or class payload.

#include <array>
#include <charconv>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "a2seek/codes.hpp"
#include "a2seek/geometry.hpp"

namespace a2seek {

inline constexpr std::string_view kNullToken = "<NULL>";

enum class Stage { Trigger, Diagnose, Reasoning, Reflection, Seeking };

inline constexpr std::array<Stage, 5> kAllStages = {Stage::Trigger, Stage::Diagnose, Stage::Reasoning,
                                                    Stage::Reflection, Stage::Seeking};

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Trigger: return "Trigger";
    case Stage::Diagnose: return "Diagnose";
    case Stage::Reasoning: return "Reasoning";
    case Stage::Reflection: return "Reflection";
    case Stage::Seeking: return "Seeking";
  }
  return "Reasoning";
}

inline std::optional<Stage> parse_stage_name(std::string_view name) {
  for (Stage s : kAllStages)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

struct StageSpan {
  Stage stage = Stage::Reasoning;
  std::string text;

  bool is_null() const { return text == kNullToken; }
  friend bool operator==(const StageSpan&, const StageSpan&) = default;
};

struct SeekRequest {
  std::optional<BoundingBox> region;  // nullopt renders as <NULL>

  friend bool operator==(const SeekRequest&, const SeekRequest&) = default;
};

struct AnswerBlock {
  std::optional<ActionCode> class_code;                 // nullopt renders as <NULL>
  std::optional<std::vector<BoundingBox>> evidence_boxes = std::vector<BoundingBox>{};

  friend bool operator==(const AnswerBlock&, const AnswerBlock&) = default;
};

struct GotTranscript {
  std::vector<StageSpan> think;
  std::optional<SeekRequest> seek;
  std::optional<AnswerBlock> answer;

  friend bool operator==(const GotTranscript&, const GotTranscript&) = default;
};

enum class ParseErrorKind { UnbalancedTag, UnknownTag, TagOrderViolation, MalformedBox };

inline std::string_view to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::UnbalancedTag: return "UnbalancedTag";
    case ParseErrorKind::UnknownTag: return "UnknownTag";
    case ParseErrorKind::TagOrderViolation: return "TagOrderViolation";
    case ParseErrorKind::MalformedBox: return "MalformedBox";
  }
  return "ParseError";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t offset, std::string expected)
      : std::runtime_error(std::string(to_string(kind)) + " at byte " + std::to_string(offset) +
                           ": expected " + expected),
        kind_(kind), offset_(offset), expected_(std::move(expected)) {}

  ParseErrorKind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

 private:
  ParseErrorKind kind_;
  std::size_t offset_;
  std::string expected_;
};

namespace detail {

inline constexpr std::array<std::string_view, 6> kBlockTags = {
    "<think>", "</think>", "<seeking>", "</seeking>", "<answer>", "</answer>"};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

class TranscriptParser {
 public:
  explicit TranscriptParser(std::string_view text) : s_(text) {}

  GotTranscript parse() {
    GotTranscript t;
    skip_space();
    if (!lookahead("<think>")) {
      if (lookahead("<seeking>") || lookahead("<answer>"))
        fail(ParseErrorKind::TagOrderViolation, "'<think>' before other blocks");
      fail_unknown_at_top("'<think>'");
    }
    pos_ += 7;
    t.think = parse_think_body();

    skip_space();
    if (lookahead("<seeking>")) {
      pos_ += 9;
      SeekRequest req;
      req.region = parse_box_or_null();
      expect_close("</seeking>");
      t.seek = req;
      skip_space();
    }
    if (lookahead("<answer>")) {
      pos_ += 8;
      t.answer = parse_answer_body();
      skip_space();
    }
    if (pos_ != s_.size()) {
      if (lookahead("<think>") || lookahead("<seeking>") || lookahead("<answer>"))
        fail(ParseErrorKind::TagOrderViolation, "blocks in order think, seeking, answer");
      if (lookahead("</")) fail(ParseErrorKind::UnbalancedTag, "end of input");
      fail_unknown_at_top("end of input");
    }
    return t;
  }

 private:
  [[noreturn]] void fail(ParseErrorKind kind, std::string expected) const {
    throw ParseError(kind, pos_, std::move(expected));
  }

  [[noreturn]] void fail_unknown_at_top(std::string expected) const {
    if (pos_ >= s_.size()) fail(ParseErrorKind::UnbalancedTag, expected);
    for (auto tag : kBlockTags)
      if (lookahead(tag)) fail(ParseErrorKind::UnbalancedTag, expected);
    fail(ParseErrorKind::UnknownTag, expected);
  }

  bool lookahead(std::string_view tok) const { return s_.substr(pos_, tok.size()) == tok; }

  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void expect_close(std::string_view tag) {
    if (!lookahead(tag)) fail(ParseErrorKind::UnbalancedTag, "'" + std::string(tag) + "'");
    pos_ += tag.size();
  }

  bool at_block_tag() const {
    for (auto tag : kBlockTags)
      if (lookahead(tag)) return true;
    return false;
  }

  // Reads free text up to the next stage tag or block tag.
  std::string read_text() {
    std::size_t start = pos_;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '<' && (lookahead("<|") || at_block_tag())) break;
      if (c == '|' && lookahead("|>")) fail(ParseErrorKind::UnknownTag, "'<|' opening a stage tag");
      ++pos_;
    }
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<StageSpan> parse_think_body() {
    std::vector<StageSpan> spans;
    std::string lead = read_text();
    bool blank = true;
    for (char c : lead) blank = blank && is_space(c);
    if (!blank) spans.push_back({Stage::Reasoning, std::move(lead)});
    while (true) {
      if (pos_ >= s_.size()) fail(ParseErrorKind::UnbalancedTag, "'</think>'");
      if (lookahead("</think>")) {
        pos_ += 8;
        return spans;
      }
      if (lookahead("<|")) {
        std::size_t close = s_.find("|>", pos_ + 2);
        if (close == std::string_view::npos) fail(ParseErrorKind::UnknownTag, "'|>' closing a stage tag");
        auto stage = parse_stage_name(s_.substr(pos_ + 2, close - pos_ - 2));
        if (!stage) fail(ParseErrorKind::UnknownTag, "one of Trigger, Diagnose, Reasoning, Reflection, Seeking");
        pos_ = close + 2;
        spans.push_back({*stage, read_text()});
        continue;
      }
      // Any other block tag before </think>.
      fail(ParseErrorKind::UnbalancedTag, "'</think>'");
    }
  }

  long long parse_int() {
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    long long v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail(ParseErrorKind::MalformedBox, "integer coordinate");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  void expect_char(char c, ParseErrorKind kind, const char* what) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(kind, what);
    ++pos_;
  }

  BoundingBox parse_box() {
    std::size_t start = pos_;
    expect_char('[', ParseErrorKind::MalformedBox, "'['");
    long long v[4];
    for (int i = 0; i < 4; ++i) {
      v[i] = parse_int();
      expect_char(i < 3 ? ',' : ']', ParseErrorKind::MalformedBox, i < 3 ? "','" : "']'");
    }
    BoundingBox b{static_cast<double>(v[0]), static_cast<double>(v[1]), static_cast<double>(v[2]),
                  static_cast<double>(v[3])};
    if (!b.valid()) {
      pos_ = start;
      fail(ParseErrorKind::MalformedBox, "x_min <= x_max and y_min <= y_max");
    }
    return b;
  }

  std::optional<BoundingBox> parse_box_or_null() {
    if (lookahead(kNullToken)) {
      pos_ += kNullToken.size();
      return std::nullopt;
    }
    return parse_box();
  }

  AnswerBlock parse_answer_body() {
    AnswerBlock a;
    if (lookahead(kNullToken)) {
      pos_ += kNullToken.size();
      a.class_code = std::nullopt;
    } else {
      auto code = parse_action_code(s_.substr(pos_, 3));
      if (!code) fail(ParseErrorKind::UnknownTag, "class code E00..E20 or <NULL>");
      pos_ += 3;
      a.class_code = code;
    }
    if (pos_ < s_.size() && s_[pos_] == ';') {
      ++pos_;
      if (lookahead(kNullToken)) {
        pos_ += kNullToken.size();
        a.evidence_boxes = std::nullopt;
      } else {
        std::vector<BoundingBox> boxes;
        boxes.push_back(parse_box());
        while (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          boxes.push_back(parse_box());
        }
        a.evidence_boxes = std::move(boxes);
      }
    }
    expect_close("</answer>");
    return a;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline void append_int(std::string& out, double v) {
  out += std::to_string(static_cast<long long>(v));
}

inline void append_box(std::string& out, const std::optional<BoundingBox>& b) {
  if (!b) {
    out += kNullToken;
    return;
  }
  out += '[';
  append_int(out, b->x_min);
  out += ',';
  append_int(out, b->y_min);
  out += ',';
  append_int(out, b->x_max);
  out += ',';
  append_int(out, b->y_max);
  out += ']';
}

}  // namespace detail

/// True when the text can appear as a stage span without changing the parse.
inline bool valid_stage_text(std::string_view text) {
  if (text.find("<|") != std::string_view::npos || text.find("|>") != std::string_view::npos) return false;
  for (auto tag : detail::kBlockTags)
    if (text.find(tag) != std::string_view::npos) return false;
  return true;
}

/// Throws ParseError on malformed input.
inline GotTranscript parse_transcript(std::string_view text) {
  return detail::TranscriptParser(text).parse();
}

/// Canonical text. Box coordinates are written as integers; stage texts must
/// satisfy valid_stage_text (std::invalid_argument otherwise).
inline std::string render_transcript(const GotTranscript& t) {
  std::string out = "<think>";
  for (const auto& span : t.think) {
    if (!valid_stage_text(span.text))
      throw std::invalid_argument("render_transcript: stage text contains a tag delimiter");
    out += "<|";
    out += stage_name(span.stage);
    out += "|>";
    out += span.text;
  }
  out += "</think>";
  if (t.seek) {
    out += "<seeking>";
    detail::append_box(out, t.seek->region);
    out += "</seeking>";
  }
  if (t.answer) {
    out += "<answer>";
    out += t.answer->class_code ? to_string(*t.answer->class_code) : std::string(kNullToken);
    if (!t.answer->evidence_boxes) {
      out += ';';
      out += kNullToken;
    } else if (!t.answer->evidence_boxes->empty()) {
      out += ';';
      bool first = true;
      for (const auto& b : *t.answer->evidence_boxes) {
        if (!first) out += ',';
        first = false;
        detail::append_box(out, b);
      }
    }
    out += "</answer>";
  }
  return out;
}

/// Template adherence: parses, with both a think and an answer block.
inline bool validate_format(std::string_view text) {
  try {
    return parse_transcript(text).answer.has_value();
  } catch (const ParseError&) {
    return false;
  }
}

/// Whitespace-delimited tokens across all stage texts; <NULL> counts zero.
inline std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !detail::is_space(text[i])) ++i;
    if (i > start && text.substr(start, i - start) != kNullToken) ++n;
  }
  return n;
}

inline std::size_t think_token_count(const GotTranscript& t) {
  std::size_t n = 0;
  for (const auto& span : t.think) n += count_tokens(span.text);
  return n;
}

/// Plain think text (stage texts joined by single spaces, <NULL> dropped).
inline std::string think_plain_text(const GotTranscript& t) {
  std::string out;
  for (const auto& span : t.think) {
    if (span.is_null() || span.text.empty()) continue;
    if (!out.empty()) out += ' ';
    out += span.text;
  }
  return out;
}

}  // namespace a2seek
