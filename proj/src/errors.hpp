#pragma once

#include <stdexcept>
#include <string>

namespace cps {

// Error categories; values double as process exit codes at the C boundary.
enum class ErrorCode : int {
    internal = 1,
    spec = 2,
    resource = 3,
    audit = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void spec_error(const std::string& msg) { throw Error(ErrorCode::spec, msg); }
[[noreturn]] inline void resource_error(const std::string& msg) { throw Error(ErrorCode::resource, msg); }
[[noreturn]] inline void internal_error(const std::string& msg) { throw Error(ErrorCode::internal, msg); }

}  // namespace cps
