#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tcml/ast.hpp"

namespace tcml::rt {

using ThreadId = std::int64_t;

constexpr std::int64_t kRootNode = -1;

// What a parked thread is waiting for.
struct BlockInfo {
  ChannelId chan{-1};
  bool is_send = false;
  ValuePtr payload;  // only for sends
};

// Coordinator-side mirror of one entry in a worker's alternative stack.
// `inner` is the frozen list of entries that sat inside this one when it was
// captured; restoring the entry reinstates exactly that list.
struct MirrorEntry {
  TxnId txn;
  std::vector<MirrorEntry> inner;
};

// Frozen shape of a transaction subtree taken when it was embedded into
// another transaction. Used to rebuild the subtree if the host aborts.
// Nested alternative copies travel with it: a rebuilt transaction must
// still revive its own embedded guests if it aborts later.
struct NodeSnapshot {
  TxnId txn;
  std::vector<TxnId> cos;
  std::vector<ThreadId> threads;  // live threads at this node at capture time
  std::vector<NodeSnapshot> children;
  std::vector<NodeSnapshot> alt_txns;
};

struct Node {
  TxnId txn;  // invalid for the root
  std::int64_t parent = kRootNode;
  std::vector<std::int64_t> children;  // creation order
  std::vector<ThreadId> threads;       // sorted, live threads only
  std::vector<TxnId> cos;
  // Snapshots of transactions embedded into this one, in embed order. They
  // are the alternative's copy of those transactions and are consumed on
  // abort, discarded on commit.
  std::vector<NodeSnapshot> alt_txns;
  std::int64_t last_activity = 0;
};

struct ThreadRec {
  std::int64_t node = kRootNode;
  bool alive = true;
  std::optional<BlockInfo> blocked;
  ValuePtr finished;  // set once the thread's expression is a value
  // Innermost-first, mirrors the worker's alternative stack. For live
  // threads with no in-flight directives the entry names equal the trie
  // path from the thread's node up to the root.
  std::vector<MirrorEntry> mirror;
  // Directives issued but not yet acknowledged (threaded mode bookkeeping).
  int outstanding = 0;
  // Incremented on rollback/kill; notifications stamped with an older epoch
  // arrive from discarded speculation and are dropped.
  std::int64_t epoch = 0;
};

struct RtMetrics {
  std::int64_t spawns = 0;
  std::int64_t txn_starts = 0;
  std::int64_t cos = 0;
  std::int64_t syncs = 0;
  std::int64_t embeds = 0;
  std::int64_t commits = 0;
  std::int64_t aborts = 0;
  std::int64_t kills = 0;
  std::int64_t revivals = 0;
  std::int64_t stale_drops = 0;
  std::int64_t run_decisions = 0;    // staged-family keep-running choices
  std::int64_t abort_decisions = 0;  // staged-family abort choices
  std::int64_t policy_invocations = 0;
  std::int64_t directives = 0;
  std::int64_t pure_steps = 0;
};

// Plans returned by mutations: what the executor must tell the workers.
struct EmbedPush {
  ThreadId thread;
  int pos;  // index in the worker's stack where the new entry goes
};

struct RestoreSpec {
  ThreadId thread;
  std::int64_t target_node;
  bool was_alive;  // false means this is a revival from a frozen copy
};

struct AbortPlan {
  std::vector<RestoreSpec> restores;
  std::vector<ThreadId> kills;
  // Transactions recreated from frozen copies, preorder. The trace replays
  // these as restored txn_start events so it stays self-contained.
  std::vector<std::int64_t> rebuilt;
};

// The full coordinator state. All mutations preserve the uniqueness
// invariant: every live thread sits in exactly one node's thread list, and
// every transaction identifier keys at most one live node.
struct RtState {
  std::map<std::int64_t, Node> nodes;  // keyed by txn instance, kRootNode = root
  std::map<ThreadId, ThreadRec> threads;
  std::int64_t version = 0;
  std::int64_t now = 0;  // nanos, virtual or wall

  RtMetrics metrics;

  RtState();

  Node& node(std::int64_t id);
  const Node& node(std::int64_t id) const;
  ThreadRec& rec(ThreadId t);
  const ThreadRec& rec(ThreadId t) const;
  bool has_node(std::int64_t id) const { return nodes.count(id) != 0; }

  std::vector<TxnId> path(std::int64_t id) const;  // root..id, outermost first
  std::string path_string(std::int64_t id) const;
  bool in_subtree(std::int64_t id, std::int64_t root_id) const;
  std::vector<std::int64_t> subtree(std::int64_t root_id) const;  // preorder
  std::vector<ThreadId> subtree_threads(std::int64_t root_id) const;
  bool commit_enabled(std::int64_t id) const;
  // Live transactions, ascending by instance.
  std::vector<std::int64_t> live_txns() const;

  void bump_activity(std::int64_t id);

  // Thread lifecycle.
  void add_thread(ThreadId t, std::int64_t node_id);
  void spawn(ThreadId parent, ThreadId child);
  void txn_start(ThreadId t, const TxnId& k);
  void register_co(ThreadId t, const TxnId& k);
  void block(ThreadId t, BlockInfo info);
  void finish(ThreadId t, ValuePtr v);
  // Clears blocked/finished after a sync delivery or rollback.
  void resume(ThreadId t);

  // Transactional mutations.
  EmbedPush embed_thread(ThreadId t, std::int64_t k);
  std::vector<EmbedPush> embed_txn(std::int64_t m, std::int64_t k);
  // Returns the threads whose k entry must be dropped. Requires
  // commit_enabled(k).
  std::vector<ThreadId> commit(std::int64_t k);
  AbortPlan abort(std::int64_t k);

  // Debug invariant check; aborts the process on violation.
  void check_invariants() const;

 private:
  NodeSnapshot capture(std::int64_t id) const;
  std::int64_t rebuild(const NodeSnapshot& snap, std::int64_t parent_id);
  void erase_cos_deep(std::int64_t id, const TxnId& k);
  void detach_thread(ThreadId t);
  void attach_thread(ThreadId t, std::int64_t node_id);
};

}  // namespace tcml::rt
