#pragma once

#include <stdexcept>
#include <string>

namespace vlut {

enum class Errc {
  invalid_input,
  invalid_argument,
  behind_camera,
  out_of_frustum,
  bad_magic,
  version_mismatch,
  truncated,
  non_finite,
  invalid_value,
  load_error,
  io_error,
  unconstrained_system,
  invalid_anchor,
};

const char* to_string(Errc code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_input: return "invalid input";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::behind_camera: return "behind camera";
    case Errc::out_of_frustum: return "out of frustum";
    case Errc::bad_magic: return "bad magic";
    case Errc::version_mismatch: return "version mismatch";
    case Errc::truncated: return "truncated";
    case Errc::non_finite: return "non-finite value";
    case Errc::invalid_value: return "invalid value";
    case Errc::load_error: return "load error";
    case Errc::io_error: return "i/o error";
    case Errc::unconstrained_system: return "unconstrained system";
    case Errc::invalid_anchor: return "invalid anchor";
  }
  return "unknown";
}

}  // namespace vlut
