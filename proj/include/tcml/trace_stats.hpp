#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tcml/sched.hpp"
#include "tcml/trace.hpp"

namespace tcml::rt {

struct TraceCheckConfig {
  // Which policy produced the trace; decides which checks apply.
  PolicyKind policy = PolicyKind::Staged;
  std::int64_t da_timeout_nanos = 50'000'000;
};

struct TraceStats {
  std::int64_t events = 0;
  std::map<std::string, std::int64_t> kind_counts;
  std::int64_t violations = 0;
  // First few violation details, for diagnostics.
  std::vector<std::string> problems;

  std::string to_json() const;
  std::string to_table() const;
};

// Validates policy invariants over a trace:
//  - a commit of k only after a co event for k (all policies);
//  - every embed carries its justification pair (comm-driven and
//    delayed-abort policies);
//  - no abort within the timeout of the transaction's last recorded
//    activity (delayed-abort policy; meaningful for virtual-time traces).
TraceStats check_trace(const std::vector<TraceEvent>& events,
                       const TraceCheckConfig& cfg);

}  // namespace tcml::rt
