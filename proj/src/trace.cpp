#include "tcml/trace.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace tcml::rt {

using nlohmann::json;

std::string TraceEvent::to_line() const {
  // Field order is part of the format: determinism tests compare raw bytes.
  std::ostringstream os;
  os << "{\"seq\":" << seq << ",\"wallNanos\":" << wall_nanos
     << ",\"kind\":" << json(kind).dump() << ",\"thread\":" << thread
     << ",\"txn\":" << json(txn).dump() << ",\"path\":" << json(path).dump()
     << ",\"extra\":{";
  auto sorted = extra;
  std::sort(sorted.begin(), sorted.end());
  bool first = true;
  for (const auto& [k, v] : sorted) {
    if (!first) os << ",";
    first = false;
    os << json(k).dump() << ":" << json(v).dump();
  }
  os << "}}";
  return os.str();
}

std::optional<TraceEvent> TraceEvent::parse_line(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  TraceEvent ev;
  ev.seq = j.value("seq", std::int64_t{-1});
  ev.wall_nanos = j.value("wallNanos", std::int64_t{0});
  ev.kind = j.value("kind", "");
  ev.thread = j.value("thread", std::int64_t{-1});
  ev.txn = j.value("txn", "");
  ev.path = j.value("path", "");
  if (auto it = j.find("extra"); it != j.end() && it->is_object()) {
    for (auto& [k, v] : it->items()) {
      ev.extra.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  if (ev.kind.empty() || ev.seq < 0) return std::nullopt;
  return ev;
}

std::string TraceEvent::get(const std::string& key) const {
  for (const auto& [k, v] : extra)
    if (k == key) return v;
  return "";
}

std::int64_t TraceLog::push(TraceEvent ev) {
  ev.seq = next_seq_++;
  if (enabled_) events_.push_back(std::move(ev));
  return next_seq_ - 1;
}

std::string TraceLog::to_ndjson() const {
  std::string out;
  for (const auto& ev : events_) {
    out += ev.to_line();
    out += '\n';
  }
  return out;
}

std::vector<TraceEvent> parse_ndjson(const std::string& text) {
  std::vector<TraceEvent> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (auto ev = TraceEvent::parse_line(line)) out.push_back(std::move(*ev));
  }
  return out;
}

}  // namespace tcml::rt
