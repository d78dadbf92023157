#pragma once

#include <string_view>

#include "tcml/ast.hpp"
#include "tcml/types.hpp"

namespace tcml {

// Parses a complete program (a single expression) from source text.
// Throws ParseError on the first lexical or syntactic fault.
ExprPtr parse_program(std::string_view source);

// Parses a type in the annotation syntax. Exposed for tests and tooling.
TypePtr parse_type_text(std::string_view source);

}  // namespace tcml
