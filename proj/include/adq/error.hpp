// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adq {

enum class Errc {
  // dataset-core
  BadMagic,
  TruncatedFile,
  NonFiniteValue,
  IoFailure,
  ChecksumMismatch,
  // bin-generation
  UnknownId,
  InvalidBinCount,
  // texture-scoring
  PatchTooLarge,
  MissingImage,
  // diversity-scoring
  ZeroVector,
  BinTooSmall,
  // importance-sampling
  EmptyInput,
  LengthMismatch,
  BadAlpha,
  BadKeepRatio,
  QuotaExceedsBin,
  // general
  InvalidArgument,
  ConfigError,
  InvariantViolation,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::IoFailure: return "IoFailure";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::UnknownId: return "UnknownId";
    case Errc::InvalidBinCount: return "InvalidBinCount";
    case Errc::PatchTooLarge: return "PatchTooLarge";
    case Errc::MissingImage: return "MissingImage";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::BinTooSmall: return "BinTooSmall";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::BadAlpha: return "BadAlpha";
    case Errc::BadKeepRatio: return "BadKeepRatio";
    case Errc::QuotaExceedsBin: return "QuotaExceedsBin";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Process exit code for the CLI: 2 config, 3 I/O, 4 invariant violation.
constexpr int exit_code(Errc code) {
  switch (code) {
    case Errc::InvalidBinCount:
    case Errc::PatchTooLarge:
    case Errc::BadAlpha:
    case Errc::BadKeepRatio:
    case Errc::ConfigError:
    case Errc::InvalidArgument:
      return 2;
    case Errc::BadMagic:
    case Errc::TruncatedFile:
    case Errc::NonFiniteValue:
    case Errc::IoFailure:
    case Errc::ChecksumMismatch:
    case Errc::MissingImage:
      return 3;
    default:
      return 4;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Same error, prefixed with the pipeline stage it escaped from.
  Error in_stage(std::string_view stage) const { return Error(code_, "[" + std::string(stage) + "] " + detail_); }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace adq
