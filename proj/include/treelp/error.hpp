#pragma once

#include <stdexcept>
#include <string>

namespace treelp {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorKind { usage, data, model };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed or inconsistent input data (datasets, cases, rule text).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// A tree or program that violates its structural invariants.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorKind::model, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Same kind as `e`, as its concrete type, with a new message.
[[noreturn]] inline void rethrow_as(const Error& e, const std::string& what) {
  switch (e.kind()) {
    case ErrorKind::usage: throw UsageError(what);
    case ErrorKind::data: throw DataError(what);
    case ErrorKind::model: throw ModelError(what);
  }
  throw Error(e.kind(), what);
}

}  // namespace treelp
