#ifndef MOBILITY_ERROR_HPP
#define MOBILITY_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mobility {

enum class ErrorCode {
  Configuration,
  DegenerateProjection,
  NothingVisible,
  InsufficientData,
  NoPlaneFound,
  Numeric,
  ModelDegenerate,
  Scorer,
  Io,
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

}  // namespace mobility

#endif  // MOBILITY_ERROR_HPP
