#ifndef BCPVS_ERRORS_HPP
#define BCPVS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bcpvs {

/// Broad failure classes. The CLI maps each class onto a distinct exit code.
enum class ErrorClass { Config = 2, Io = 3, Numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

// Numeric failures.
class SingularSystem : public Error {
 public:
  explicit SingularSystem(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

class NonFinite : public Error {
 public:
  explicit NonFinite(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

// Configuration / model-space violations.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::Config, what) {}
};

class MaskTooLarge : public Error {
 public:
  explicit MaskTooLarge(const std::string& what) : Error(ErrorClass::Config, what) {}
};

class TooLarge : public Error {
 public:
  explicit TooLarge(const std::string& what) : Error(ErrorClass::Config, what) {}
};

// Input files.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::Io, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row, long column)
      : Error(ErrorClass::Io, what + " (row " + std::to_string(row) + ", column " +
                                  std::to_string(column) + ")"),
        row_(row),
        column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorClass::Io, what) {}
};

}  // namespace bcpvs

#endif  // BCPVS_ERRORS_HPP
