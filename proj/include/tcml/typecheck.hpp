#pragma once

#include <map>
#include <set>

#include "tcml/ast.hpp"
#include "tcml/types.hpp"

namespace tcml {

// Typing context. Surface programs start from an empty one; the channel map
// exists so that mid-execution terms containing channel literals can still be
// checked in tests.
struct TypeEnv {
  std::map<Symbol, TypePtr> vars;
  std::set<Symbol> txns;                 // transaction binders in scope
  std::map<ChannelId, TypePtr> chans;    // payload type per channel literal
};

// Returns the type of a closed (w.r.t. env) expression or throws TypeError.
TypePtr typecheck(const ExprPtr& e, const TypeEnv& env = {});
TypePtr typecheck_value(const ValuePtr& v, const TypeEnv& env = {});

}  // namespace tcml
