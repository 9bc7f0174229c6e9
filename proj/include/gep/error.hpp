#ifndef GEP_ERROR_HPP
#define GEP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gep {

/// Base class of every error raised by the library.
/// exit_code() is the process exit status the CLI maps the error to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 2; }
};

/// Malformed or invalid grammar text. line/column are 1-based; 0 when
/// the problem is not tied to a source position.
class GrammarError : public Error {
 public:
  GrammarError(const std::string& message, int line = 0, int column = 0)
      : Error(format(message, line, column)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& message, int line, int column) {
    if (line <= 0) return message;
    return "line " + std::to_string(line) + ", column " +
           std::to_string(column) + ": " + message;
  }

  int line_;
  int column_;
};

/// Bad input data: unknown labels, malformed matrices, size mismatches.
class InputError : public Error {
 public:
  using Error::Error;
};

/// No grammatical sentence has positive probability under the matrix.
class InfeasibleParseError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

}  // namespace gep

#endif  // GEP_ERROR_HPP
