#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synthner {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented contract (bad file, bad config, bad response payload).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Any failure talking to a remote model service.
class RemoteError : public Error {
 public:
  using Error::Error;
};

/// Transport failures or 5xx responses persisted through the whole retry budget.
class RemoteUnavailable : public RemoteError {
 public:
  RemoteUnavailable(const std::string& what, int attempts)
      : RemoteError(what), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Non-retryable non-2xx status.
class RemoteStatusError : public RemoteError {
 public:
  RemoteStatusError(int status, const std::string& what)
      : RemoteError(what), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Response arrived but is not a protocol message (bad JSON, missing fields, wrong cardinality).
class RemoteProtocolError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

/// Well-formed response whose content breaks the contract for one item (sample text outside
/// the length window, label count mismatch, unknown label). `item` names the sample or document.
class ResponseValidationError : public ValidationError {
 public:
  ResponseValidationError(const std::string& item, const std::string& what)
      : ValidationError(item + ": " + what), item_(item) {}

  const std::string& item() const noexcept { return item_; }

 private:
  std::string item_;
};

}  // namespace synthner
