#pragma once

#include <stdexcept>
#include <string>

namespace ocpad {

/// Broad failure classes. The CLI maps each onto a process exit code.
enum class ErrorKind {
  usage,     ///< bad arguments or configuration values
  contract,  ///< data or shape contract violated (wrong labels, shapes, ids)
  format,    ///< malformed or truncated file
  io,        ///< file could not be opened, read or written
  numeric,   ///< non-finite values or solver non-convergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::usage, w) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& w) : Error(ErrorKind::contract, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::format, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};

}  // namespace ocpad
