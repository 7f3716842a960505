#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fluororeg {

/// Failure categories raised across the library. Each maps to one named
/// error condition of a module contract.
enum class ErrorKind {
  InvalidGeometry,
  RayParallelToDetector,
  BehindSource,
  InvalidConfig,
  NonFiniteObjective,
  NonFiniteGradient,
  DimensionMismatch,
  ConstantImage,
  ParseError,
  EmptyMesh,
  InvalidParams,
  NotWatertight,
  DegenerateConfiguration,
  InsufficientCorrespondences,
  InversionDivergence,
  NoShadowFound,
  PartialShadow,
  MagnificationTooSmall,
  DuplicateId,
  NotFound,
  IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// ParseError carrying the byte offset (binary formats) or 1-based line
/// number (text formats) where parsing stopped. Unused position is -1.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long long byte_offset, long long line)
      : Error(ErrorKind::ParseError, what), byte_offset_(byte_offset), line_(line) {}

  long long byte_offset() const noexcept { return byte_offset_; }
  long long line() const noexcept { return line_; }

 private:
  long long byte_offset_;
  long long line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fluororeg
