#pragma once

#include <stdexcept>
#include <string>

namespace gazeaudit {

enum class ErrorCode {
    InvalidArgument,
    Io,
    Parse,
    Domain,
    Degenerate,
    NotFound,
    Conflict,
};

/// Every failure raised by the library. The C API maps `code()` onto its
/// status enum, the CLI maps any Error onto exit status 1.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace gazeaudit
