/* Copyright 2026 The StreamThink Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "streamthink/stream_model.h"

namespace streamthink {

struct CotDelimiters {
  std::string segment_end = "<EOS>";
  std::string question_end = "<EOQ>";
  std::string thought_end = "<EOT>";
};

// kReduced accepts segment headers without the segment-end marker.
enum class DelimiterProfile { kStrict, kReduced };

struct CotParseOptions {
  CotDelimiters delimiters;
  DelimiterProfile profile = DelimiterProfile::kStrict;
};

// Header attributes are kept as the trimmed text between '|' separators,
// e.g. "time = 0-30" or "frames = 30".
struct SegmentInput {
  int index = 0;
  std::vector<std::string> attributes;
  bool operator==(const SegmentInput&) const = default;
};

struct QuestionInput {
  int index = 0;
  std::vector<std::string> attributes;
  std::optional<std::string> question;
  std::optional<std::string> reference_answer;
  bool operator==(const QuestionInput&) const = default;
};

struct SegmentThought {
  int index = 0;
  std::optional<std::string> focus;
  std::optional<std::string> evidence;
  std::optional<std::string> state_update;
  bool operator==(const SegmentThought&) const = default;
};

struct QaThought {
  int index = 0;
  std::optional<std::string> reasoning;
  std::optional<std::string> answer;
  bool operator==(const QaThought&) const = default;
};

using CotInput = std::variant<SegmentInput, QuestionInput>;
using CotChunk = std::variant<SegmentThought, QaThought>;

struct CotDocument {
  std::vector<CotInput> inputs;
  std::vector<CotChunk> outputs;
  bool operator==(const CotDocument&) const = default;
};

// Value of a "key = value" header attribute, if present.
std::optional<std::string> header_attribute(const std::vector<std::string>& attributes,
                                            std::string_view key);

// Throws ParseError with kSyntaxError, kUnterminatedUnit or kUnknownHeader.
// Blank lines are insignificant; a field value may continue over following
// lines that do not start with a field label.
CotDocument parse_cot(std::string_view text, const CotParseOptions& options = {});

// Canonical text: inputs first, one blank line, then chunks separated by
// blank lines.  Field values are written as stored.
std::string serialize_cot(const CotDocument& doc, const CotDelimiters& delimiters = {});

struct Violation {
  std::string constraint;  // "A".."G" or "structure"
  int unit = 0;            // 1-based position in the output sequence
  std::string message;
  bool operator==(const Violation&) const = default;
};

enum class CheckLevel { kChecked, kStructuralSubset, kNotCheckable };

struct ConstraintCoverage {
  char constraint;
  CheckLevel level;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool pass() const { return violations.empty(); }
  bool has(std::string_view constraint) const;
  bool has(std::string_view constraint, int unit) const;
};

const std::vector<ConstraintCoverage>& constraint_coverage();
std::string_view check_level_name(CheckLevel level);

ValidationReport validate_cot(const CotDocument& doc);

// A document that passes validate_cot, with placeholder reasoning text.
// Throws kLengthMismatch unless there is one answer per question.
CotDocument synthesize_document(const UnitStream& stream,
                                const std::vector<std::string>& answers);
std::string synthesize_skeleton(const UnitStream& stream,
                                const std::vector<std::string>& answers,
                                const CotDelimiters& delimiters = {});

}  // namespace streamthink
