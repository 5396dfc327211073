#pragma once

#include <stdexcept>
#include <string>

namespace cseg {

// Error categories, kept in sync with the cseg_status codes of the C API.
enum class ErrorCode {
    invalid_argument = 1,
    io = 2,
    format = 3,
    state = 4,
    not_ready = 5,
    internal = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(std::string msg) {
    throw Error(ErrorCode::invalid_argument, std::move(msg));
}

[[noreturn]] inline void throw_io(std::string msg) {
    throw Error(ErrorCode::io, std::move(msg));
}

[[noreturn]] inline void throw_format(std::string msg) {
    throw Error(ErrorCode::format, std::move(msg));
}

[[noreturn]] inline void throw_state(std::string msg) {
    throw Error(ErrorCode::state, std::move(msg));
}

[[noreturn]] inline void throw_not_ready(std::string msg) {
    throw Error(ErrorCode::not_ready, std::move(msg));
}

[[noreturn]] inline void throw_internal(std::string msg) {
    throw Error(ErrorCode::internal, std::move(msg));
}

}  // namespace cseg
