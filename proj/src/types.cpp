#include "tcml/types.hpp"

namespace tcml {

TypePtr Type::unit() {
  static TypePtr t(new Type(Kind::Unit, nullptr, nullptr));
  return t;
}

TypePtr Type::boolean() {
  static TypePtr t(new Type(Kind::Bool, nullptr, nullptr));
  return t;
}

TypePtr Type::integer() {
  static TypePtr t(new Type(Kind::Int, nullptr, nullptr));
  return t;
}

TypePtr Type::prod(TypePtr l, TypePtr r) {
  return TypePtr(new Type(Kind::Prod, std::move(l), std::move(r)));
}

TypePtr Type::arrow(TypePtr dom, TypePtr cod) {
  return TypePtr(new Type(Kind::Arrow, std::move(dom), std::move(cod)));
}

TypePtr Type::chan(TypePtr payload) {
  return TypePtr(new Type(Kind::Chan, std::move(payload), nullptr));
}

// Concrete syntax: chan binds tightest (postfix), then *, then -> (right
// associative). Parentheses are emitted whenever a subterm is at equal or
// lower binding strength, which round-trips through the parser.
std::string Type::show() const {
  switch (kind) {
    case Kind::Unit: return "unit";
    case Kind::Bool: return "bool";
    case Kind::Int:  return "int";
    case Kind::Prod: {
      auto wrap = [](const TypePtr& t) {
        std::string s = t->show();
        if (t->kind == Kind::Prod || t->kind == Kind::Arrow) return "(" + s + ")";
        return s;
      };
      return wrap(a) + " * " + wrap(b);
    }
    case Kind::Arrow: {
      std::string lhs = a->show();
      if (a->kind == Kind::Arrow) lhs = "(" + lhs + ")";
      return lhs + " -> " + b->show();
    }
    case Kind::Chan: {
      std::string inner = a->show();
      // Postfix chan stacks without parentheses; only infix types need them.
      if (a->kind == Kind::Prod || a->kind == Kind::Arrow)
        inner = "(" + inner + ")";
      return inner + " chan";
    }
  }
  return "?";
}

bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Type::Kind::Unit:
    case Type::Kind::Bool:
    case Type::Kind::Int:
      return true;
    case Type::Kind::Prod:
    case Type::Kind::Arrow:
      return type_equal(a->a, b->a) && type_equal(a->b, b->b);
    case Type::Kind::Chan:
      return type_equal(a->a, b->a);
  }
  return false;
}

}  // namespace tcml
