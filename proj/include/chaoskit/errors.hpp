#pragma once

#include <stdexcept>
#include <string>

namespace ck {

// Precondition or input validation failure. Carries a machine-readable code
// and the offending field so front ends can emit structured error records.
class ValidationError : public std::runtime_error {
public:
  ValidationError(std::string code, std::string message, std::string field = {})
      : std::runtime_error(message), code_(std::move(code)), field_(std::move(field)) {}
  const std::string& code() const { return code_; }
  const std::string& field() const { return field_; }

private:
  std::string code_;
  std::string field_;
};

class SizeLimitError : public ValidationError {
public:
  SizeLimitError(std::string message, std::string field = {})
      : ValidationError("size_limit", std::move(message), std::move(field)) {}
};

} // namespace ck
