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

#include "streamthink/error.h"

namespace streamthink {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyStream: return "EmptyStream";
    case ErrorCode::kQuestionBeforeAnySegment: return "QuestionBeforeAnySegment";
    case ErrorCode::kNonChronologicalTimestamps: return "NonChronologicalTimestamps";
    case ErrorCode::kInvalidUnit: return "InvalidUnit";
    case ErrorCode::kInvalidDurations: return "InvalidDurations";
    case ErrorCode::kUnorderedQuestionTimes: return "UnorderedQuestionTimes";
    case ErrorCode::kMissingGeneratedLengths: return "MissingGeneratedLengths";
    case ErrorCode::kUnsupportedShape: return "UnsupportedShape";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kOutOfOrderIngest: return "OutOfOrderIngest";
    case ErrorCode::kOutOfOrderDecode: return "OutOfOrderDecode";
    case ErrorCode::kSnapshotTooShort: return "SnapshotTooShort";
    case ErrorCode::kSnapshotTooLong: return "SnapshotTooLong";
    case ErrorCode::kInvalidLengths: return "InvalidLengths";
    case ErrorCode::kTurnNotFound: return "TurnNotFound";
    case ErrorCode::kIndexGap: return "IndexGap";
    case ErrorCode::kDuplicateNote: return "DuplicateNote";
    case ErrorCode::kInvalidHorizon: return "InvalidHorizon";
    case ErrorCode::kDivergent: return "Divergent";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnterminatedUnit: return "UnterminatedUnit";
    case ErrorCode::kUnknownHeader: return "UnknownHeader";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

ParseError::ParseError(ErrorCode code,
                       int line,
                       int column,
                       const std::string& message)
    : Error(code,
            std::to_string(line) + ":" + std::to_string(column) + ": " +
                message),
      line_(line),
      column_(column) {}

}  // namespace streamthink
