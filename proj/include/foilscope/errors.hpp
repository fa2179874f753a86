#pragma once

#include <stdexcept>
#include <string>

namespace foilscope {

/// Caller broke a documented precondition (unknown action, concept of ⊥, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed text input. Carries a 1-based line/column when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) +
                                          ", column " + std::to_string(column) +
                                          ": " + what
                                    : what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// The agent's own plan fails or misses the goal: the session is malformed.
class InvalidPlan : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace foilscope
