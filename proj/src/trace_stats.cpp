#include "tcml/trace_stats.hpp"

#include <set>
#include <sstream>

#include "json.hpp"
#include "trace_replay.hpp"

namespace tcml::rt {

namespace {

constexpr std::size_t kMaxProblems = 20;

void flag(TraceStats& st, std::string msg) {
  ++st.violations;
  if (st.problems.size() < kMaxProblems) st.problems.push_back(std::move(msg));
}

}  // namespace

TraceStats check_trace(const std::vector<TraceEvent>& events,
                       const TraceCheckConfig& cfg) {
  TraceStats st;
  TraceTree tree;
  // co tokens survive inside alternative snapshots, so a commit after a
  // restore may legally rely on a co emitted long before; the set is never
  // pruned.
  std::set<std::string> co_seen;
  bool staged_embeds = cfg.policy == PolicyKind::CommDriven ||
                       cfg.policy == PolicyKind::DelayedAbort;

  for (const auto& ev : events) {
    ++st.events;
    ++st.kind_counts[ev.kind];

    if (ev.kind == "co") {
      co_seen.insert(ev.txn);
    } else if (ev.kind == "commit") {
      if (!co_seen.count(ev.txn))
        flag(st, "seq " + std::to_string(ev.seq) + ": commit of " + ev.txn +
                     " with no prior co");
    } else if (ev.kind == "embed" && staged_embeds) {
      if (ev.get("jt1").empty() || ev.get("jt2").empty() ||
          ev.get("jchan").empty())
        flag(st, "seq " + std::to_string(ev.seq) +
                     ": embed without a recorded justification pair");
    } else if (ev.kind == "abort" &&
               cfg.policy == PolicyKind::DelayedAbort) {
      if (const ReplayNode* n = tree.find(ev.txn)) {
        std::int64_t gap = ev.wall_nanos - n->last_activity;
        if (gap < cfg.da_timeout_nanos)
          flag(st, "seq " + std::to_string(ev.seq) + ": abort of " + ev.txn +
                       " only " + std::to_string(gap) +
                       "ns after its last activity");
      }
    }
    tree.apply(ev);
  }
  return st;
}

std::string TraceStats::to_json() const {
  nlohmann::ordered_json j;
  j["events"] = events;
  nlohmann::ordered_json kinds;
  for (const auto& [k, n] : kind_counts) kinds[k] = n;
  j["kinds"] = std::move(kinds);
  j["violations"] = violations;
  j["problems"] = problems;
  return j.dump(2);
}

std::string TraceStats::to_table() const {
  std::ostringstream out;
  out << "events " << events << "\n";
  for (const auto& [k, n] : kind_counts) out << "  " << k << " " << n << "\n";
  out << "violations " << violations << "\n";
  for (const auto& p : problems) out << "  " << p << "\n";
  return out.str();
}

}  // namespace tcml::rt
