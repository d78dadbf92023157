#pragma once

#include <optional>
#include <random>
#include <string>

#include "tcml/trie.hpp"

namespace tcml::rt {

enum class PolicyKind { Random, Staged, CommDriven, DelayedAbort };

std::optional<PolicyKind> parse_policy(const std::string& name);  // r s cd da
std::string policy_name(PolicyKind k);

struct PolicyConfig {
  double run_prob = 0.95;
  double abort_prob = 0.05;
  std::int64_t da_timeout_nanos = 50'000'000;
};

struct Directive {
  enum class Kind { Sync, Commit, Abort, EmbedThread, EmbedTxn };
  Kind kind;
  // Sync: payload is looked up from the sender at apply time.
  ThreadId sender = -1;
  ThreadId receiver = -1;
  ChannelId chan{-1};
  // Commit / Abort / embed target transaction (node id).
  std::int64_t txn = kRootNode;
  // EmbedThread unit.
  ThreadId thread = -1;
  // EmbedTxn unit (node id).
  std::int64_t moved = kRootNode;
  // Communication justification, set by the cd/da embed filter.
  ThreadId jt1 = -1;
  ThreadId jt2 = -1;
  ChannelId jchan{-1};
};

struct Candidates {
  std::vector<Directive> syncs;
  std::vector<Directive> commits;
  std::vector<Directive> embeds;
  std::vector<Directive> aborts;
  bool empty() const {
    return syncs.empty() && commits.empty() && embeds.empty() && aborts.empty();
  }
};

// Everything enabled in the current state, in a deterministic order.
Candidates enumerate_candidates(const RtState& s);

// Keeps only embeds backed by a complementary blocked pair within two levels
// of the units involved, and records the pair on the directive.
void filter_embeds_comm_justified(const RtState& s, std::vector<Directive>& embeds);

// Keeps only aborts of transactions idle for at least `timeout_nanos`.
void filter_aborts_by_timer(const RtState& s, std::int64_t timeout_nanos,
                            std::vector<Directive>& aborts);

using Rng = std::mt19937_64;

// Picks at most one directive. Pure in the state; draws only from `rng`.
// Updates decision counters in `metrics` for the staged family.
std::optional<Directive> policy_step(PolicyKind kind, const RtState& s,
                                     const PolicyConfig& cfg, Rng& rng,
                                     RtMetrics& metrics);

}  // namespace tcml::rt
