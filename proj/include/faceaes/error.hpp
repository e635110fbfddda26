#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace faceaes {

enum class ErrorKind {
  Io,
  MalformedHeader,
  Truncated,
  Checksum,
  NameMismatch,
  DimMismatch,
  NonFinite,
  RowCountMismatch,
  InvalidManifest,
  InvalidArgument,
  SingleClass,
  UndefinedCorrelation,
};

constexpr std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::Io: return "io";
    case ErrorKind::MalformedHeader: return "malformed-header";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::NameMismatch: return "name-mismatch";
    case ErrorKind::DimMismatch: return "dim-mismatch";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::RowCountMismatch: return "row-count-mismatch";
    case ErrorKind::InvalidManifest: return "invalid-manifest";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::SingleClass: return "single-class";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation";
  }
  return "unknown";
}

/// Every failure in the library is reported as an Error carrying a kind, so
/// callers (and the CLI) can branch on the variant rather than on text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace faceaes
