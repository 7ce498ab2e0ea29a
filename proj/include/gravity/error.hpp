#pragma once

#include <stdexcept>
#include <string>

namespace gravity {

// Base class for all domain errors raised by the toolkit. The CLI maps these
// to exit status 1; anything else escaping a subcommand is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (bad CSV rows, duplicate keys, ...).
class DataError : public Error {
 public:
  DataError(const std::string& what, long row = -1)
      : Error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what),
        row_(row) {}

  // 1-based data row number (header excluded), or -1 if not row specific.
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class EmptyPanelError : public Error {
 public:
  using Error::Error;
};

// Every observation was removed by the pruner.
class FullyUninformativeError : public Error {
 public:
  using Error::Error;
};

// Covariate absorbed by the fixed effects or a singular weighted Gram matrix.
class IdentificationError : public Error {
 public:
  IdentificationError(const std::string& what, std::string column = {})
      : Error(what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gravity
