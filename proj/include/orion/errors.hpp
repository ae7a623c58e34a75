#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace orion {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, std::string expected, std::string found = {})
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": expected " + expected +
              (found.empty() ? std::string{} : ", found '" + found + "'")),
        line_(line),
        column_(column),
        expected_(std::move(expected)) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string expected_;
};

class UnknownOperationKeyword : public SyntaxError {
 public:
  UnknownOperationKeyword(std::size_t line, std::size_t column, const std::string& word)
      : SyntaxError(line, column, "operation keyword", word) {}
};

class UnknownFSet : public Error {
 public:
  explicit UnknownFSet(const std::string& n) : Error("unknown feature set '" + n + "'") {}
};

class UnknownTargetType : public Error {
 public:
  explicit UnknownTargetType(const std::string& n) : Error("unknown target type '" + n + "'") {}
};

class DuplicateName : public Error {
 public:
  explicit DuplicateName(const std::string& n) : Error("duplicate name '" + n + "'") {}
};

class UnknownType : public Error {
 public:
  explicit UnknownType(const std::string& n) : Error("unknown schema type '" + n + "'") {}
};

class InvalidSchema : public Error {
 public:
  using Error::Error;
};

class UsingMismatch : public Error {
 public:
  using Error::Error;
};

/// A taxonomy precondition does not hold. `clause` names the violated condition.
class PreconditionViolation : public Error {
 public:
  explicit PreconditionViolation(std::string clause, std::string detail = {})
      : Error(detail.empty() ? clause : clause + " (" + detail + ")"), clause_(std::move(clause)) {}
  const std::string& clause() const { return clause_; }

 private:
  std::string clause_;
};

class UnknownVariation : public PreconditionViolation {
 public:
  UnknownVariation(const std::string& type, int id)
      : PreconditionViolation("variation in V^t", type + "::v" + std::to_string(id)) {}
};

class NonScalarCastTarget : public PreconditionViolation {
 public:
  NonScalarCastTarget() : PreconditionViolation("cast target is scalar") {}
};

class AmbiguousSelector : public PreconditionViolation {
 public:
  explicit AmbiguousSelector(const std::string& d) : PreconditionViolation("unambiguous selector", d) {}
};

// Data-level failures raised by the reference data engine.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t record) : Error(what), record_(record) {}
  std::size_t record() const { return record_; }
  std::size_t op_index() const { return op_; }
  const std::string& locator() const { return locator_; }

  /// Attaches the failing operation and record position; used by migrate before rethrowing.
  void locate(std::size_t op, std::size_t record, std::string locator) {
    op_ = op;
    record_ = record;
    locator_ = std::move(locator);
  }

 private:
  std::size_t record_;
  std::size_t op_ = 0;
  std::string locator_;
};

class CastError : public DataError {
 public:
  using DataError::DataError;
};
class JoinAmbiguity : public DataError {
 public:
  using DataError::DataError;
};
class MissingKey : public DataError {
 public:
  using DataError::DataError;
};
class UniquenessViolation : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace orion
