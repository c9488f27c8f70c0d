#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace drs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a domain invariant. field() names the offending field
// using a dotted path (e.g. "location.lat", "attributes.damage_level").
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Input text or a structured record does not match the expected format.
class ParseError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace drs
