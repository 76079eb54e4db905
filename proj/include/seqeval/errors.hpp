#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqeval {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (length mismatch, empty
/// reference list, incompatible n-gram orders, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// Every reference of an example is empty after tokenization, so a
/// reference-normalized rate (WER/TER) is undefined.
class UndefinedReferenceError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Data on disk or in an upload does not satisfy the layout invariants.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(std::vector<std::string> details)
      : Error(join(details)), details_(std::move(details)) {}

  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  static std::string join(const std::vector<std::string>& parts) {
    std::string out = "integrity check failed";
    for (const auto& p : parts) {
      out += "; ";
      out += p;
    }
    return out;
  }

  std::vector<std::string> details_;
};

/// Path traversal, absolute paths or other unsafe archive/url content.
class SecurityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A request parameter is malformed or names something unknown.
class InvalidRequest : public Error {
 public:
  InvalidRequest(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The target of a write (e.g. an ingested eval set) already exists.
class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqeval
