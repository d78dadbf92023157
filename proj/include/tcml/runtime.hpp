#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcml/ast.hpp"
#include "tcml/sched.hpp"
#include "tcml/trace.hpp"
#include "tcml/trie.hpp"

namespace tcml::rt {

struct RunConfig {
  PolicyKind policy = PolicyKind::Staged;
  std::uint64_t seed = 0;
  PolicyConfig policy_cfg;
  // Deterministic single-threaded simulation with a virtual clock. One
  // scheduling slice advances the clock by one virtual millisecond.
  bool deterministic = false;
  std::int64_t max_virtual_steps = 50'000;  // simulation budget
  std::int64_t max_wall_millis = 2'000;     // threaded budget
  bool collect_trace = false;
  int pure_slice = 256;  // pure reductions per scheduling slice
};

struct RunResult {
  // True when the run reached a state with no runnable thread, no enabled
  // communication and no live transaction; `outcome` is then meaningful.
  bool quiescent = false;
  bool timed_out = false;
  std::string outcome;
  std::string error;  // nonempty when a thread got stuck (shape error)
  RtMetrics metrics;
  std::vector<TraceEvent> events;  // populated when collect_trace is set
  std::string trace_ndjson() const;
};

RunResult run_program(const ExprPtr& program, const RunConfig& cfg);

}  // namespace tcml::rt
