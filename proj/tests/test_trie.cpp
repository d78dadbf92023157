#include "tcml/trie.hpp"

#include "doctest.h"
#include "tcml/symbol.hpp"

using namespace tcml;
using namespace tcml::rt;

namespace {

TxnId tid(std::int64_t inst, const char* name) {
  return TxnId{inst, Symbol::intern(name)};
}

std::vector<TxnId> mirror_names(const RtState& s, ThreadId t) {
  std::vector<TxnId> out;
  for (const auto& e : s.rec(t).mirror) out.push_back(e.txn);
  return out;
}

}  // namespace

TEST_SUITE("trie") {

TEST_CASE("transaction entry and commit splice back to the parent") {
  RtState s;
  s.add_thread(0, kRootNode);
  TxnId k = tid(0, "k");
  s.txn_start(0, k);
  CHECK(s.rec(0).node == 0);
  CHECK(s.path_string(0) == "/k.0");
  CHECK(mirror_names(s, 0) == std::vector<TxnId>{k});
  CHECK_FALSE(s.commit_enabled(0));

  s.register_co(0, k);
  CHECK(s.commit_enabled(0));
  auto drops = s.commit(0);
  CHECK(drops == std::vector<ThreadId>{0});
  CHECK(s.rec(0).node == kRootNode);
  CHECK(mirror_names(s, 0).empty());
  CHECK(s.live_txns().empty());
  s.check_invariants();
}

TEST_CASE("commit moves ancestor tokens up and erases stale own tokens") {
  RtState s;
  s.add_thread(0, kRootNode);
  s.add_thread(1, kRootNode);
  TxnId j = tid(0, "j");
  TxnId k = tid(1, "k");
  s.txn_start(0, j);
  s.txn_start(0, k);  // k nested inside j
  // A commit for the outer transaction executed deep inside, plus k's own.
  s.register_co(0, j);
  s.register_co(0, k);
  // A stray k token deeper still: thread 1 embedded into j then into k would
  // produce one; simulate with a nested transaction holding one.
  TxnId l = tid(2, "l");
  s.txn_start(0, l);
  s.register_co(0, k);
  // thread 0 sits in l now; l's node holds a co for k.
  CHECK(s.node(2).cos.size() == 1);
  s.commit(1);  // dissolve k
  // j's token moved to j's node, k's own token gone, the deep k token erased.
  CHECK(s.node(0).cos == std::vector<TxnId>{j});
  CHECK(s.node(2).cos.empty());
  // l is now a direct child of j.
  CHECK(s.node(2).parent == 0);
  s.check_invariants();
}

TEST_CASE("thread embed pushes an entry at the innermost position") {
  RtState s;
  s.add_thread(0, kRootNode);
  s.add_thread(1, kRootNode);
  TxnId k = tid(0, "k");
  s.txn_start(0, k);
  EmbedPush p = s.embed_thread(1, 0);
  CHECK(p.thread == 1);
  CHECK(p.pos == 0);
  CHECK(s.rec(1).node == 0);
  CHECK(mirror_names(s, 1) == std::vector<TxnId>{k});
  CHECK(s.rec(1).mirror[0].inner.empty());
  s.check_invariants();
}

TEST_CASE("transaction embed records a frozen copy and stacks entries above the chain") {
  RtState s;
  s.add_thread(0, kRootNode);
  s.add_thread(1, kRootNode);
  TxnId m = tid(0, "m");
  TxnId k = tid(1, "k");
  s.txn_start(0, m);
  s.register_co(0, m);  // a pending token, must survive restoration
  s.txn_start(1, k);
  auto pushes = s.embed_txn(0, 1);
  REQUIRE(pushes.size() == 1);
  CHECK(pushes[0].thread == 0);
  CHECK(pushes[0].pos == 1);  // after the m entry
  CHECK(mirror_names(s, 0) == std::vector<TxnId>{m, k});
  CHECK(s.rec(0).mirror[1].inner.size() == 1);
  CHECK(s.node(0).parent == 1);
  CHECK(s.path_string(0) == "/k.1/m.0");
  REQUIRE(s.node(1).alt_txns.size() == 1);
  const NodeSnapshot& snap = s.node(1).alt_txns[0];
  CHECK(snap.txn == m);
  CHECK(snap.cos == std::vector<TxnId>{m});
  CHECK(snap.threads == std::vector<ThreadId>{0});
  s.check_invariants();
}

TEST_CASE("abort restores embedded transactions with their tokens") {
  RtState s;
  s.add_thread(0, kRootNode);
  s.add_thread(1, kRootNode);
  TxnId m = tid(0, "m");
  s.txn_start(0, m);
  s.register_co(0, m);
  s.txn_start(1, tid(1, "k"));
  s.embed_txn(0, 1);
  // Activity inside k after the embed: a second token would enable commit;
  // instead the host aborts and the embedded transaction must come back.
  AbortPlan plan = s.abort(1);
  CHECK(plan.kills.empty());
  REQUIRE(plan.restores.size() == 2);  // thread 0 and the initiator thread 1
  CHECK(plan.rebuilt == std::vector<std::int64_t>{0});
  CHECK(s.has_node(0));
  CHECK_FALSE(s.has_node(1));
  CHECK(s.node(0).parent == kRootNode);
  CHECK(s.node(0).cos == std::vector<TxnId>{m});
  CHECK(s.rec(0).node == 0);
  CHECK(mirror_names(s, 0) == std::vector<TxnId>{m});
  CHECK(s.rec(1).node == kRootNode);
  CHECK(mirror_names(s, 1).empty());
  s.check_invariants();
}

TEST_CASE("abort kills threads born inside and revives them when a frozen copy returns") {
  RtState s;
  s.add_thread(0, kRootNode);
  s.add_thread(1, kRootNode);
  TxnId m = tid(0, "m");
  TxnId k = tid(1, "k");
  s.txn_start(0, m);
  s.spawn(0, 2);  // born inside m: no entry for m
  CHECK(mirror_names(s, 2).empty());
  s.txn_start(1, k);
  auto pushes = s.embed_txn(0, 1);
  REQUIRE(pushes.size() == 2);
  // Thread 2 has no chain entries, so its k entry goes at position 0.
  for (const auto& p : pushes)
    CHECK(p.pos == (p.thread == 0 ? 1 : 0));

  // An inner abort of m kills thread 2 (no m entry) and restores thread 0.
  AbortPlan inner = s.abort(0);
  CHECK(inner.kills == std::vector<ThreadId>{2});
  REQUIRE(inner.restores.size() == 1);
  CHECK_FALSE(s.rec(2).alive);
  // Thread 2 still holds its k entry; the frozen copy of m can revive it.
  CHECK(mirror_names(s, 2) == std::vector<TxnId>{k});
  CHECK(s.rec(0).node == 1);  // restored into k, where m sat

  // Now the host aborts: the copy of m taken at embed time comes back, with
  // thread 2 alive inside it again.
  AbortPlan outer = s.abort(1);
  CHECK(outer.kills.empty());
  CHECK(outer.rebuilt == std::vector<std::int64_t>{0});
  bool revived = false;
  for (const auto& r : outer.restores)
    if (r.thread == 2 && !r.was_alive) revived = true;
  CHECK(revived);
  CHECK(s.rec(2).alive);
  CHECK(s.rec(2).node == 0);
  CHECK(mirror_names(s, 2).empty());  // born inside: still no entry for m
  CHECK(s.rec(0).node == 0);
  CHECK(s.metrics.revivals == 1);
  s.check_invariants();
}

TEST_CASE("commit of a nested transaction keeps the host entry intact") {
  RtState s;
  s.add_thread(0, kRootNode);
  TxnId k = tid(0, "k");
  TxnId l = tid(1, "l");
  s.txn_start(0, k);
  s.txn_start(0, l);
  s.register_co(0, l);
  s.commit(1);
  CHECK(s.rec(0).node == 0);
  CHECK(mirror_names(s, 0) == std::vector<TxnId>{k});
  // The k entry still holds the frozen inner list from entry time.
  CHECK(s.rec(0).mirror[0].inner.empty());
  s.check_invariants();
}

TEST_CASE("activity timestamps bump the whole ancestor chain") {
  RtState s;
  s.add_thread(0, kRootNode);
  s.txn_start(0, tid(0, "k"));
  s.now = 50;
  s.txn_start(0, tid(1, "l"));
  CHECK(s.node(0).last_activity == 50);
  CHECK(s.node(1).last_activity == 50);
  CHECK(s.nodes.at(kRootNode).last_activity == 50);
  s.now = 90;
  s.register_co(0, tid(1, "l"));
  CHECK(s.node(0).last_activity == 90);
}

}  // TEST_SUITE
