#pragma once

#include <stdexcept>
#include <string>

namespace faircf {

// Process exit codes used by the CLI. Every library error maps onto one.
enum class ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kConfig = 2,
  kData = 3,
  kDivergence = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const { return ExitCode::kFailure; }

  // Pipeline stage that raised the error, if known.
  const std::string& stage() const { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  std::string stage_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kConfig; }
};

class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kData; }
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, long row, long column)
      : DataError(what), row_(row), column_(column) {}
  long row() const { return row_; }
  long column() const { return column_; }

 private:
  long row_;
  long column_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class LookupError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

// Raised when a population that must be non-empty is empty (no affected
// rows, a missing protected group, an empty favorable pool).
class EmptyPopulationError : public DataError {
 public:
  using DataError::DataError;
};

class AuditError : public DataError {
 public:
  using DataError::DataError;
};

// The classifier was asked about a point it cannot score (prediction-file
// backend queried off its table).
class UnseenInstanceError : public DataError {
 public:
  using DataError::DataError;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kDivergence; }
};

// API misuse, e.g. stepping an environment whose episode already ended.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace faircf
