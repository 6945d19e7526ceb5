#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace cdapf {

enum class ErrorCode {
  MalformedProject,
  UnsupportedShape,
  UnknownClass,
  OutOfBoundsVertex,
  MissingDimensions,
  ValidationFailed,
  DimensionMismatch,
  EmptyUnion,
  EmptyInput,
  EmptyMask,
  EmptyStyleMask,
  UnknownApparel,
  MissingPart,
  InvalidBase,
  InsufficientInputs,
  MissingHeader,
  InvalidImage,
  InvalidArgument,
  UnknownField,
  NotFound,
  DuplicateId,
  IntegrityError,
  StorageIo,
};

std::string_view to_string(ErrorCode code);

// Exit-code classes used by the CLI: 2 validation, 3 not found, 4 I/O.
int exit_code_for(ErrorCode code);

// Single exception type for the whole library. `details` carries structured
// context (region index, row number, ...) and is forwarded verbatim in API
// error payloads.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr)
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace cdapf
