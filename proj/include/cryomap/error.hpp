#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "cryomap/stage.hpp"

namespace cryomap {

enum class ErrorCode {
  // input / validation
  MissingColumn,
  BadNumber,
  BadUnit,
  DuplicateRecord,
  UndeclaredAxisValue,
  MissingTimestamp,
  SnapCollision,
  EmptyDataset,
  InvalidArgument,
  InsufficientData,
  RankDeficient,
  MissingSourceData,
  InconsistentCoupling,
  MissingTemperature,
  BadDocument,
  Io,
  // domain / solver
  OutOfDomain,
  InvalidCell,
  CollapsedAxisMismatch,
  NotBracketed,
  NonMonotoneProfile,
  NoSharedNodes,
  NoValidStart,
  NoImprovement,
  NotConverged,
  SolveFailure,
};

enum class ErrorKind { Input, Domain };

constexpr ErrorKind error_kind(ErrorCode code) {
  return code >= ErrorCode::OutOfDomain ? ErrorKind::Domain : ErrorKind::Input;
}

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-readable code and, where one applies, the
/// stage that triggered it (e.g. the axis an out-of-domain query left).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<StageId> stage = std::nullopt)
      : std::runtime_error(message), code_(code), stage_(stage) {}

  ErrorCode code() const { return code_; }
  ErrorKind kind() const { return error_kind(code_); }
  const std::optional<StageId>& stage() const { return stage_; }

 private:
  ErrorCode code_;
  std::optional<StageId> stage_;
};

}  // namespace cryomap
