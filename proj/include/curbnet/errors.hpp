#pragma once

#include <stdexcept>
#include <string>

namespace curbnet {

/// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller handed in a value outside an operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A byte buffer or text record does not follow its wire format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing, malformed or violates its invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A scenario file failed validation. Carries the offending field and record.
class LoadError : public Error {
 public:
  LoadError(std::string field, std::string record, const std::string& what)
      : Error(what + " (field '" + field + "', record " + record + ")"),
        field_(std::move(field)),
        record_(std::move(record)) {}

  const std::string& field() const { return field_; }
  const std::string& record() const { return record_; }

 private:
  std::string field_;
  std::string record_;
};

/// An internal invariant broke while a simulation was running.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace curbnet
