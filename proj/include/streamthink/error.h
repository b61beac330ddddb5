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

#include <stdexcept>
#include <string>
#include <string_view>

namespace streamthink {

enum class ErrorCode {
  // stream model
  kEmptyStream,
  kQuestionBeforeAnySegment,
  kNonChronologicalTimestamps,
  kInvalidUnit,
  kInvalidDurations,
  kUnorderedQuestionTimes,
  // masks and positions
  kMissingGeneratedLengths,
  kUnsupportedShape,
  kLengthMismatch,
  kDimensionMismatch,
  // engine and cache
  kInvalidConfig,
  kOutOfOrderIngest,
  kOutOfOrderDecode,
  kSnapshotTooShort,
  kSnapshotTooLong,
  // pipeline
  kInvalidLengths,
  kTurnNotFound,
  kIndexGap,
  kDuplicateNote,
  // latency model
  kInvalidHorizon,
  kDivergent,
  // cot format
  kSyntaxError,
  kUnterminatedUnit,
  kUnknownHeader,
  // io
  kInvalidSpec,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Parse failure with a 1-based source location.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, int line, int column, const std::string& message);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace streamthink
