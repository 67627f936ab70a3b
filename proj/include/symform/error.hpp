#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace symform {

enum class ErrorCode {
  InvalidOrder,
  NormalizationError,
  InvalidMirror,
  WrongKind,
  Incompatible,
  InvalidEdge,
  AlreadyAssigned,
  UnassignedEdges,
  InvalidAnchor,
  Asymmetry,
  AmbiguousNullspace,
  NoPath,
  ShapeError,
  NoPositiveEigenvalue,
  InvalidScale,
  UnstableStep,
  Divergence,
  // scenario ingestion
  IoError,
  MalformedJson,
  MissingField,
  BadFamily,
  MissingAnchor,
  MalformedNumber,
  InvalidValue,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidOrder: return "invalid-order";
    case ErrorCode::NormalizationError: return "normalization-error";
    case ErrorCode::InvalidMirror: return "invalid-mirror";
    case ErrorCode::WrongKind: return "wrong-kind";
    case ErrorCode::Incompatible: return "incompatible";
    case ErrorCode::InvalidEdge: return "invalid-edge";
    case ErrorCode::AlreadyAssigned: return "already-assigned";
    case ErrorCode::UnassignedEdges: return "unassigned-edges";
    case ErrorCode::InvalidAnchor: return "invalid-anchor";
    case ErrorCode::Asymmetry: return "asymmetry";
    case ErrorCode::AmbiguousNullspace: return "ambiguous-nullspace";
    case ErrorCode::NoPath: return "no-path";
    case ErrorCode::ShapeError: return "shape-error";
    case ErrorCode::NoPositiveEigenvalue: return "no-positive-eigenvalue";
    case ErrorCode::InvalidScale: return "invalid-scale";
    case ErrorCode::UnstableStep: return "unstable-step";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::MalformedJson: return "malformed-json";
    case ErrorCode::MissingField: return "missing-field";
    case ErrorCode::BadFamily: return "bad-family";
    case ErrorCode::MissingAnchor: return "missing-anchor";
    case ErrorCode::MalformedNumber: return "malformed-number";
    case ErrorCode::InvalidValue: return "invalid-value";
  }
  return "unknown";
}

/// Exception carrying a stable machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace detail

}  // namespace symform
