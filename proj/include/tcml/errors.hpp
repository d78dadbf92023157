#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tcml {

// 1-based line/column plus byte offset into the source buffer.
struct SourcePos {
  int line = 0;
  int col = 0;
  std::size_t offset = 0;

  std::string to_string() const {
    return std::to_string(line) + ":" + std::to_string(col);
  }
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lexical or syntactic failure, reported at the first offending position.
struct ParseError : Error {
  ParseError(SourcePos p, const std::string& msg)
      : Error(p.to_string() + ": " + msg), pos(p) {}
  SourcePos pos;
};

struct TypeError : Error {
  TypeError(SourcePos p, const std::string& msg)
      : Error((p.line ? p.to_string() + ": " : std::string()) + msg), pos(p) {}
  SourcePos pos;
};

// A closed expression that is neither a value nor reducible. Cannot occur
// after typechecking; signaled for raw input.
struct StuckError : Error {
  using Error::Error;
};

// delta applied outside its domain (wrong operand shapes).
struct DeltaUndefinedError : StuckError {
  using StuckError::StuckError;
};

// Internal protocol violation in the runtime (unknown thread or transaction
// in a notification or directive). Always a bug, never user error.
struct ProtocolError : Error {
  using Error::Error;
};

}  // namespace tcml
