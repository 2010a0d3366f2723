#pragma once

#include <stdexcept>
#include <string>

namespace hyperlab {

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind {
    usage = 2,
    geometry = 3,
    resource = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void usage_error(const std::string& msg) { throw Error(ErrorKind::usage, msg); }
[[noreturn]] inline void geometry_error(const std::string& msg) { throw Error(ErrorKind::geometry, msg); }
[[noreturn]] inline void resource_error(const std::string& msg) { throw Error(ErrorKind::resource, msg); }

namespace limits {
// Beyond this displacement the disk model loses boundary resolution in double precision.
inline constexpr double max_displacement = 30.0;
inline constexpr double geometry_tol = 1e-9;
inline constexpr double det_tol = 1e-9;
inline constexpr double disk_guard = 1e-12;
}  // namespace limits

}  // namespace hyperlab
