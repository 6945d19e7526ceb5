#include "cdapf/error.hpp"

namespace cdapf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedProject: return "MalformedProject";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::OutOfBoundsVertex: return "OutOfBoundsVertex";
    case ErrorCode::MissingDimensions: return "MissingDimensions";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyUnion: return "EmptyUnion";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptyStyleMask: return "EmptyStyleMask";
    case ErrorCode::UnknownApparel: return "UnknownApparel";
    case ErrorCode::MissingPart: return "MissingPart";
    case ErrorCode::InvalidBase: return "InvalidBase";
    case ErrorCode::InsufficientInputs: return "InsufficientInputs";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::StorageIo: return "StorageIo";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownApparel:
      return 3;
    case ErrorCode::StorageIo:
    case ErrorCode::IntegrityError:
      return 4;
    default:
      return 2;
  }
}

}  // namespace cdapf
