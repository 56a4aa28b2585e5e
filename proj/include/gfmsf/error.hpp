#pragma once

#include <stdexcept>
#include <string>

namespace gfmsf {

enum class ErrorCode {
    invalid_argument = 1,
    singular_impedance,
    degenerate_cbf,
    parse_error,
    invalid_config,
    io_error,
    numeric_blowup,
    certificate_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace gfmsf
