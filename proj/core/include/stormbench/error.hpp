#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stormbench {

// Machine-readable failure classes shared by every module. The control
// service maps these onto HTTP status codes.
enum class ErrorCode {
    LengthError,
    RangeError,
    ConfigError,
    ShapeError,
    IllegalState,
    RoleConflict,
    UnknownWaveform,
    UnknownDevice,
    InsufficientData,
    CompatibilityError,
    DuplicateError,
    ParseError,
    ValidationFailed,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace stormbench
