#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascinv {

// Base of every error raised by the library. kind() is a short stable tag
// the CLI prints as a machine-parsable prefix.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual std::string_view kind() const noexcept = 0;
};

#define CASCINV_DEFINE_ERROR(Name, tag)                                      \
  class Name : public Error {                                                \
  public:                                                                    \
    using Error::Error;                                                      \
    std::string_view kind() const noexcept override { return tag; }          \
  };

CASCINV_DEFINE_ERROR(CapacityError, "capacity")
CASCINV_DEFINE_ERROR(ConstructionError, "construction")
CASCINV_DEFINE_ERROR(ParseError, "parse")
CASCINV_DEFINE_ERROR(ValidationError, "validation")
CASCINV_DEFINE_ERROR(DomainError, "domain")
CASCINV_DEFINE_ERROR(DegenerateEvidenceError, "degenerate-evidence")
CASCINV_DEFINE_ERROR(UsageError, "usage")
CASCINV_DEFINE_ERROR(IoError, "io")

#undef CASCINV_DEFINE_ERROR

} // namespace cascinv
