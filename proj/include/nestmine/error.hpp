#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nestmine {

enum class Errc {
    SchemaMismatch,
    UnknownAttribute,
    KindMismatch,
    DivisionByZero,
    InfeasibleConstraint,
    ResourceLimit,
    MissingSubsetSupport,
    NoAlgorithmApplicable,
    EmptyPlanSet,
    UnboundSource,
    NotMaterialized,
    InvalidValue,
    SessionBusy,
    Cancelled,
    SyntaxError,
    UnknownConstraint,
    ParseError,
    MissingColumn,
    InvalidTree,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the Errc codes so that
/// callers (CLI exit codes, HTTP status mapping, tests) can dispatch on it.
class Error : public std::runtime_error
{
  public:
    Error(Errc code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string &what) { throw Error(code, what); }

} // namespace nestmine
