#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exs {

/// Failure categories shared by the library, the HTTP service and the CLI.
enum class ErrorKind {
    InvalidArgument,  // malformed request or violated precondition
    NotFound,         // unknown document / ranker lookup target
    Conflict,         // request is ill-posed relative to the ranked list
    Unprocessable,    // converter or perturbation precondition failed
    Degenerate,       // every perturbation label is identical
    Io,               // file cannot be read or written
    Parse,            // file content is malformed
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Conflict: return "conflict";
        case ErrorKind::Unprocessable: return "unprocessable";
        case ErrorKind::Degenerate: return "degenerate_local_region";
        case ErrorKind::Io: return "io_error";
        case ErrorKind::Parse: return "parse_error";
    }
    return "unknown";
}

inline int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return 400;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Conflict: return 409;
        case ErrorKind::Unprocessable:
        case ErrorKind::Degenerate: return 422;
        case ErrorKind::Io:
        case ErrorKind::Parse: return 500;
    }
    return 500;
}

/// Exit status for the command line driver: 1 for I/O trouble, 2 for contract errors.
inline int exit_code(ErrorKind kind) {
    return (kind == ErrorKind::Io || kind == ErrorKind::Parse) ? 1 : 2;
}

}  // namespace exs
