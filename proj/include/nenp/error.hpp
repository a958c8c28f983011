#pragma once

#include <stdexcept>
#include <string>

namespace nenp {

// Categories line up with the CLI exit codes.
enum class ErrorKind { usage = 1, validation = 2, io = 3, checksum = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string const& what) : std::runtime_error{what}, kind_{kind} {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

inline Error validation_error(std::string const& what) { return {ErrorKind::validation, what}; }
inline Error io_error(std::string const& what) { return {ErrorKind::io, what}; }
inline Error usage_error(std::string const& what) { return {ErrorKind::usage, what}; }
inline Error checksum_error(std::string const& what) { return {ErrorKind::checksum, what}; }

} // namespace nenp
