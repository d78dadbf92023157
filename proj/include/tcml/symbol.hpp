#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tcml {

// Interned identifier. Equality is an integer compare; ordering is by
// spelling so that anything derived from a Symbol order is stable across
// runs (intern indices depend on interning order, spellings do not).
class Symbol {
 public:
  Symbol() : id_(0) {}

  static Symbol intern(std::string_view text);

  const std::string& str() const;
  bool empty() const { return id_ == 0; }
  std::uint32_t raw() const { return id_; }

  friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
  friend bool operator!=(Symbol a, Symbol b) { return a.id_ != b.id_; }
  friend bool operator<(Symbol a, Symbol b) {
    return a.id_ != b.id_ && a.str() < b.str();
  }

 private:
  explicit Symbol(std::uint32_t id) : id_(id) {}
  std::uint32_t id_;
};

}  // namespace tcml
