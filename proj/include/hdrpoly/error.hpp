#pragma once

#include <stdexcept>
#include <string>

namespace hdrpoly {

// Bad argument value or violated type invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input lies outside the domain a function is defined on (e.g. a tone curve
// evaluated at v > 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Filesystem failure: open, read, write, rename.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParseErrorKind {
  MalformedHeader,
  Truncated,
  NanSample,
  NonFiniteSample,
  NegativeSample,
  UnknownFormat,
  BadResolution,
  RleOverrun,
  UnsupportedFormat,
  MalformedText,
};

const char* to_string(ParseErrorKind kind);

// Decoder rejection. The kind distinguishes the failure classes so callers
// and tests can branch on them without string matching.
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

}  // namespace hdrpoly
