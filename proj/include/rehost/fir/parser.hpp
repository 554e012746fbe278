#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "rehost/fir/ast.hpp"

namespace rehost::fir {

// Base of all FIR front-end failures. `line`/`column` are 1-based; both are 0
// when the error is not tied to a source position.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class SyntaxError : public ParseError {
 public:
  using ParseError::ParseError;
};

class SemanticError : public ParseError {
 public:
  using ParseError::ParseError;
};

Program parse_program(std::string_view text);

// Checks every Program/Function invariant. parse_program calls this; passes
// that synthesize code call it on their output.
void validate_program(const Program& p);

}  // namespace rehost::fir
