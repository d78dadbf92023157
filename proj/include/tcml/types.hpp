#pragma once

#include <memory>
#include <string>

namespace tcml {

class Type;
using TypePtr = std::shared_ptr<const Type>;

// Simple types: unit, bool, int, products, functions, channel types.
class Type {
 public:
  enum class Kind { Unit, Bool, Int, Prod, Arrow, Chan };

  Kind kind;
  TypePtr a;  // Prod/Arrow left, Chan payload
  TypePtr b;  // Prod/Arrow right

  static TypePtr unit();
  static TypePtr boolean();
  static TypePtr integer();
  static TypePtr prod(TypePtr l, TypePtr r);
  static TypePtr arrow(TypePtr dom, TypePtr cod);
  static TypePtr chan(TypePtr payload);

  std::string show() const;

 private:
  Type(Kind k, TypePtr x, TypePtr y) : kind(k), a(std::move(x)), b(std::move(y)) {}
};

bool type_equal(const TypePtr& a, const TypePtr& b);

}  // namespace tcml
