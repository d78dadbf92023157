#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tcml::rt {

// One runtime event. Serialized as newline-delimited JSON with a fixed field
// order so that identical runs produce identical bytes.
struct TraceEvent {
  std::int64_t seq = 0;
  std::int64_t wall_nanos = 0;
  // spawn | txn_start | co | embed | commit | abort | sync | finish | kill |
  // stale_drop
  std::string kind;
  std::int64_t thread = -1;  // -1 when the event is not tied to a thread
  std::string txn;           // "k.3" or empty
  std::string path;          // trie path of the affected node, "/" for root
  // Flat extra payload, serialized as a JSON object sorted by key.
  std::vector<std::pair<std::string, std::string>> extra;

  std::string to_line() const;
  static std::optional<TraceEvent> parse_line(const std::string& line);

  // Convenience for extra lookups; empty string when absent.
  std::string get(const std::string& key) const;
};

// Collects events and hands out sequence numbers.
class TraceLog {
 public:
  explicit TraceLog(bool enabled) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  // Fills seq, stores the event. Returns the assigned seq.
  std::int64_t push(TraceEvent ev);
  const std::vector<TraceEvent>& events() const { return events_; }
  std::string to_ndjson() const;

 private:
  bool enabled_;
  std::int64_t next_seq_ = 0;
  std::vector<TraceEvent> events_;
};

std::vector<TraceEvent> parse_ndjson(const std::string& text);

}  // namespace tcml::rt
