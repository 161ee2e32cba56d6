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

#include <random>

#include "a2seek/got_format.hpp"

namespace a2seek {
namespace {

ParseErrorKind error_kind(std::string_view text) {
  try {
    parse_transcript(text);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ParseErrorKind::UnknownTag;
}

TEST(Parse, SingleStage) {
  auto t = parse_transcript("<think><|Trigger|>two people close</think><answer>E18</answer>");
  ASSERT_EQ(t.think.size(), 1u);
  EXPECT_EQ(t.think[0].stage, Stage::Trigger);
  EXPECT_EQ(t.think[0].text, "two people close");
  EXPECT_FALSE(t.seek);
  ASSERT_TRUE(t.answer);
  EXPECT_EQ(t.answer->class_code, ActionCode::E18);
  ASSERT_TRUE(t.answer->evidence_boxes);
  EXPECT_TRUE(t.answer->evidence_boxes->empty());
}

TEST(Parse, EmptyThink) {
  auto t = parse_transcript("<think></think><answer>E00</answer>");
  EXPECT_TRUE(t.think.empty());
  EXPECT_EQ(t.answer->class_code, ActionCode::E00);
}

TEST(Parse, UntaggedBodyIsReasoning) {
  auto t = parse_transcript("<think>just text</think>");
  ASSERT_EQ(t.think.size(), 1u);
  EXPECT_EQ(t.think[0].stage, Stage::Reasoning);
  EXPECT_FALSE(t.answer);
}

TEST(Parse, SeekAndBoxes) {
  auto t = parse_transcript(
      "<think><|Seeking|>look closer</think> <seeking>[4,4,8,8]</seeking>\n"
      "<answer>E06;[1,2,3,4],[5,6,7,8]</answer>");
  ASSERT_TRUE(t.seek);
  EXPECT_EQ(t.seek->region, (BoundingBox{4, 4, 8, 8}));
  ASSERT_EQ(t.answer->evidence_boxes->size(), 2u);
  EXPECT_EQ((*t.answer->evidence_boxes)[1], (BoundingBox{5, 6, 7, 8}));
}

TEST(Parse, NullPlaceholders) {
  auto t = parse_transcript("<think><|Diagnose|><NULL></think><seeking><NULL></seeking><answer><NULL>;<NULL></answer>");
  EXPECT_TRUE(t.think[0].is_null());
  EXPECT_FALSE(t.seek->region);
  EXPECT_FALSE(t.answer->class_code);
  EXPECT_FALSE(t.answer->evidence_boxes);
  EXPECT_EQ(think_token_count(t), 0u);
}

TEST(Parse, Errors) {
  EXPECT_EQ(error_kind("<answer>E18</answer><think>x</think>"), ParseErrorKind::TagOrderViolation);
  EXPECT_EQ(error_kind("<think>x"), ParseErrorKind::UnbalancedTag);
  EXPECT_EQ(error_kind("<think><|Pondering|>x</think>"), ParseErrorKind::UnknownTag);
  EXPECT_EQ(error_kind("<think></think><seeking>[1,2,3]</seeking>"), ParseErrorKind::MalformedBox);
  EXPECT_EQ(error_kind("<think></think><seeking>[3,0,1,4]</seeking>"), ParseErrorKind::MalformedBox);
  EXPECT_EQ(error_kind("<think></think><answer>E18</answer><seeking>[0,0,1,1]</seeking>"),
            ParseErrorKind::TagOrderViolation);
}

TEST(Parse, ErrorCarriesOffset) {
  try {
    parse_transcript("<think></think><answer>E99</answer>");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 23u);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(Render, Canonical) {
  GotTranscript t;
  t.answer = AnswerBlock{ActionCode::E00};
  EXPECT_EQ(render_transcript(t), "<think></think><answer>E00</answer>");

  t.seek = SeekRequest{BoundingBox{4, 4, 8, 8}};
  EXPECT_EQ(render_transcript(t), "<think></think><seeking>[4,4,8,8]</seeking><answer>E00</answer>");

  t.answer.reset();
  t.seek.reset();
  t.think.push_back({Stage::Trigger, "x"});
  EXPECT_EQ(render_transcript(t), "<think><|Trigger|>x</think>");
}

TEST(Render, RejectsTagInText) {
  GotTranscript t;
  t.think.push_back({Stage::Trigger, "bad </think> text"});
  EXPECT_THROW(render_transcript(t), std::invalid_argument);
}

TEST(Validate, Cases) {
  EXPECT_TRUE(validate_format("<think><|Trigger|>a</think><answer>E01</answer>"));
  EXPECT_FALSE(validate_format("<think><|Trigger|>a</think>"));
  EXPECT_TRUE(validate_format("<think>a</think><seeking>[0,0,4,4]</seeking><answer>E01</answer>"));
  EXPECT_FALSE(validate_format("<answer>E01</answer>"));
  EXPECT_FALSE(validate_format(""));
}

TEST(Tokens, Counts) {
  GotTranscript t;
  EXPECT_EQ(think_token_count(t), 0u);
  t.think.push_back({Stage::Reasoning, "a b c"});
  EXPECT_EQ(think_token_count(t), 3u);
  t.think = {{Stage::Trigger, "one two"}, {Stage::Diagnose, "three"}};
  EXPECT_EQ(think_token_count(t), 3u);
  t.think = {{Stage::Trigger, "  one \t two\n "}};
  EXPECT_EQ(think_token_count(t), 2u);
}

GotTranscript random_transcript(std::mt19937_64& rng) {
  static const char* words[] = {"left", "person", "falls", "x1", "near", "bench", "<NULL>"};
  std::uniform_int_distribution<int> small(0, 4);
  GotTranscript t;
  int spans = small(rng);
  for (int i = 0; i < spans; ++i) {
    StageSpan s{kAllStages[small(rng)], ""};
    int n = small(rng);
    if (n == 4 && (rng() & 1)) {
      s.text = "<NULL>";
    } else {
      for (int w = 0; w < n; ++w) s.text += std::string(w ? " " : "") + words[rng() % 6];
    }
    t.think.push_back(s);
  }
  auto box = [&] {
    std::uniform_int_distribution<int> c(0, 16);
    int a = c(rng), b = c(rng), d = c(rng), e = c(rng);
    return BoundingBox{double(std::min(a, b)), double(std::min(d, e)), double(std::max(a, b)), double(std::max(d, e))};
  };
  if (rng() % 3 == 0) t.seek = SeekRequest{rng() % 4 ? std::optional(box()) : std::nullopt};
  if (rng() % 4) {
    AnswerBlock a;
    if (rng() % 5) a.class_code = static_cast<ActionCode>(rng() % kNumActionCodes);
    else a.class_code.reset();
    int nb = small(rng);
    if (nb == 4) {
      a.evidence_boxes.reset();
    } else {
      for (int i = 0; i < nb; ++i) a.evidence_boxes->push_back(box());
    }
    t.answer = a;
  }
  return t;
}

TEST(Properties, RoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto t = random_transcript(rng);
    auto text = render_transcript(t);
    EXPECT_EQ(parse_transcript(text), t) << text;
    EXPECT_EQ(validate_format(text), t.answer.has_value()) << text;
  }
}

TEST(Properties, ParserTotalOnFuzz) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "<>|/[],;0123456789E think answer seeking NULL Trigger";
  std::size_t errors = 0;
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    std::size_t n = rng() % 60;
    // Mutate a valid transcript half of the time so the parser gets deep.
    if (rng() & 1) {
      s = render_transcript(random_transcript(rng));
      for (std::size_t k = 0; k < 1 + rng() % 3 && !s.empty(); ++k) s[rng() % s.size()] = alphabet[rng() % alphabet.size()];
    } else {
      for (std::size_t k = 0; k < n; ++k) s += alphabet[rng() % alphabet.size()];
    }
    try {
      parse_transcript(s);
    } catch (const ParseError& e) {
      EXPECT_LE(e.offset(), s.size());
      ++errors;
    }
  }
  EXPECT_GT(errors, 0u);
}

}  // namespace
}  // namespace a2seek
