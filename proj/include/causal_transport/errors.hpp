#pragma once

#include <stdexcept>
#include <string>

namespace ct {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define CT_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                       \
  public:                                                           \
    explicit Name(const std::string& what) : Error(what) {}         \
    const char* kind() const noexcept override { return tag; }      \
  };

CT_DEFINE_ERROR(DomainError, "domain")
CT_DEFINE_ERROR(LookupError, "lookup")
CT_DEFINE_ERROR(ParseError, "parse")
CT_DEFINE_ERROR(ValidationError, "validation")
CT_DEFINE_ERROR(ConvergenceError, "convergence")
CT_DEFINE_ERROR(SeparationError, "separation")
CT_DEFINE_ERROR(SingularError, "singular")
CT_DEFINE_ERROR(OverlapError, "overlap")
CT_DEFINE_ERROR(CapabilityError, "capability")
CT_DEFINE_ERROR(NumericalError, "numerical")
CT_DEFINE_ERROR(BootstrapError, "bootstrap")
CT_DEFINE_ERROR(StudyError, "study")
CT_DEFINE_ERROR(FileError, "file")

#undef CT_DEFINE_ERROR

}  // namespace ct
