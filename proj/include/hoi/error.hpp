// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hoi {

enum class ErrorCode {
  ZeroNorm,
  NotUnitNorm,
  DimensionMismatch,
  InvalidBox,
  PlaceholderMissing,
  BadCount,
  MissingCategory,
  MissingSignature,
  MissingEmbedding,
  UnknownCategory,
  EmptySplit,
  BadMagic,
  BadVersion,
  UnsupportedDtype,
  TruncatedPayload,
  TrailingData,
  InvalidVocabulary,
  ParseError,
  IoError,
  Usage,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hoi
