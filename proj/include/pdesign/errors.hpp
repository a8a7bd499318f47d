#pragma once

#include <stdexcept>
#include <string>

namespace pdesign {

enum class ErrorKind {
  InvalidArgument,
  InvalidMatrix,
  SingularMatrix,
  RemovalThresholdViolated,
  RankDeficient,
  DistributionInvalid,
  TooLarge,
  InvalidFile,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::RemovalThresholdViolated: return "RemovalThresholdViolated";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DistributionInvalid: return "DistributionInvalid";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::InvalidFile: return "InvalidFile";
  }
  return "Unknown";
}

}  // namespace pdesign
