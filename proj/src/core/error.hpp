#pragma once

#include <stdexcept>
#include <string>

namespace sparft {

enum class ErrorCode {
  InvalidArgument = 1,
  Io,
  Parse,
  DimensionMismatch,
  DuplicateId,
  MissingId,
  DegenerateVariance,
  CorruptArtifact,
  VersionMismatch,
  Protocol,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Protocol rule violation with a short machine-readable reason such as
// "unknown_step"; callers report it to the peer and keep going.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string reason, const std::string& what)
      : Error(ErrorCode::Protocol, what), reason_(std::move(reason)) {}

  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace sparft
