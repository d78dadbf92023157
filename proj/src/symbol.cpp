#include "tcml/symbol.hpp"

#include <deque>
#include <mutex>
#include <unordered_map>

namespace tcml {
namespace {

struct InternTable {
  std::mutex mu;
  // Deque, not vector: the map keys are views into the stored strings, and
  // short strings keep their characters inside the string object itself, so
  // the elements must never move.
  std::deque<std::string> spellings{""};  // index 0 reserved for the empty symbol
  std::unordered_map<std::string_view, std::uint32_t> index{{"", 0}};
};

InternTable& table() {
  static InternTable* t = new InternTable();  // leaked on purpose, lives for the process
  return *t;
}

}  // namespace

Symbol Symbol::intern(std::string_view text) {
  InternTable& t = table();
  std::lock_guard<std::mutex> lock(t.mu);
  auto it = t.index.find(text);
  if (it != t.index.end()) return Symbol(it->second);
  std::uint32_t id = static_cast<std::uint32_t>(t.spellings.size());
  t.spellings.push_back(std::string(text));
  // string_view key must point at the stored string, not the argument.
  t.index.emplace(t.spellings.back(), id);
  return Symbol(id);
}

const std::string& Symbol::str() const {
  InternTable& t = table();
  std::lock_guard<std::mutex> lock(t.mu);
  return t.spellings[id_];
}

}  // namespace tcml
