// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace adtg {

/// Base of every error raised by the toolkit. `is_validation()` separates
/// bad-input failures (CLI exit code 2) from everything else (exit code 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_validation() const noexcept { return false; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  bool is_validation() const noexcept override { return true; }
};

// Numeric kernel.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape error: " + what) {}
};
class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error("index error: " + what) {}
};
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain error: " + what) {}
};
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training error: " + what) {}
};
class UsageError : public ValidationError {
 public:
  explicit UsageError(const std::string& what) : ValidationError("usage error: " + what) {}
};

// Data and files.
class DataError : public ValidationError {
 public:
  explicit DataError(const std::string& what) : ValidationError("data error: " + what) {}
};
class ParseError : public ValidationError {
 public:
  explicit ParseError(const std::string& what) : ValidationError("parse error: " + what) {}
};
class SpecError : public ValidationError {
 public:
  explicit SpecError(const std::string& what) : ValidationError("spec error: " + what) {}
};
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(const std::string& what) : ValidationError("config error: " + what) {}
};
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("I/O error: " + what) {}
};

// Graph queries and planning.
class QueryError : public Error {
 public:
  explicit QueryError(const std::string& what) : Error("query error: " + what) {}
};
class PlanningError : public Error {
 public:
  explicit PlanningError(const std::string& what) : Error("planning error: " + what) {}
};

}  // namespace adtg
