#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blockmask {

/// Failure categories. The numeric values are the CLI exit codes.
enum class ErrorKind : int {
  kInput = 2,     ///< unreadable or malformed user input
  kBackend = 3,   ///< classifier failed or is unreachable
  kProtocol = 4,  ///< remote classifier answered with something unusable
  kInvalidArgument = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::kInput, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::kInvalidArgument, what) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::kBackend, what) {}
};

/// Transport-level failure talking to a remote classifier (connection refused, timeout).
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::kProtocol, what) {}
};

/// Remote label set differs from the one the caller expected.
class LabelMismatchError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// A sampling run aborted part way. `completed()` is the number of
/// perturbation evaluations that finished before the failure.
class PartialResultsError : public Error {
 public:
  PartialResultsError(ErrorKind kind, const std::string& what, std::size_t completed)
      : Error(kind, what), completed_(completed) {}
  std::size_t completed() const noexcept { return completed_; }

 private:
  std::size_t completed_;
};

}  // namespace blockmask
