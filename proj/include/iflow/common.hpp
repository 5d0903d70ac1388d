#pragma once

#include <stdexcept>
#include <string>

namespace iflow {

// Error classes map 1:1 onto the CLI exit codes and the C API status codes.
enum class ErrKind { Config = 2, Data = 3, Numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrKind::Config, msg); }
[[noreturn]] inline void data_error(const std::string& msg) { throw Error(ErrKind::Data, msg); }
[[noreturn]] inline void numeric_error(const std::string& msg) { throw Error(ErrKind::Numeric, msg); }

} // namespace iflow
