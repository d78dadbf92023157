#include "tcml/trie.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace tcml::rt {

namespace {

constexpr std::int64_t kNoParent = -2;

[[noreturn]] void die(const char* what) {
  std::fprintf(stderr, "trie invariant violated: %s\n", what);
  std::abort();
}

void require(bool ok, const char* what) {
  if (!ok) die(what);
}

void insert_sorted(std::vector<ThreadId>& v, ThreadId t) {
  auto it = std::lower_bound(v.begin(), v.end(), t);
  require(it == v.end() || *it != t, "thread inserted twice into one node");
  v.insert(it, t);
}

void remove_sorted(std::vector<ThreadId>& v, ThreadId t) {
  auto it = std::lower_bound(v.begin(), v.end(), t);
  require(it != v.end() && *it == t, "thread missing from its node");
  v.erase(it);
}

}  // namespace

RtState::RtState() {
  Node root;
  root.parent = kNoParent;
  nodes.emplace(kRootNode, std::move(root));
}

Node& RtState::node(std::int64_t id) {
  auto it = nodes.find(id);
  require(it != nodes.end(), "unknown node");
  return it->second;
}

const Node& RtState::node(std::int64_t id) const {
  auto it = nodes.find(id);
  require(it != nodes.end(), "unknown node");
  return it->second;
}

ThreadRec& RtState::rec(ThreadId t) {
  auto it = threads.find(t);
  require(it != threads.end(), "unknown thread");
  return it->second;
}

const ThreadRec& RtState::rec(ThreadId t) const {
  auto it = threads.find(t);
  require(it != threads.end(), "unknown thread");
  return it->second;
}

std::vector<TxnId> RtState::path(std::int64_t id) const {
  std::vector<TxnId> out;
  for (std::int64_t cur = id; cur != kRootNode; cur = node(cur).parent)
    out.push_back(node(cur).txn);
  std::reverse(out.begin(), out.end());
  return out;
}

std::string RtState::path_string(std::int64_t id) const {
  if (id == kRootNode) return "/";
  std::string out;
  for (const auto& k : path(id)) {
    out += '/';
    out += k.show();
  }
  return out;
}

bool RtState::in_subtree(std::int64_t id, std::int64_t root_id) const {
  for (std::int64_t cur = id;; cur = node(cur).parent) {
    if (cur == root_id) return true;
    if (cur == kRootNode) return false;
  }
}

std::vector<std::int64_t> RtState::subtree(std::int64_t root_id) const {
  std::vector<std::int64_t> out, work{root_id};
  while (!work.empty()) {
    std::int64_t cur = work.back();
    work.pop_back();
    out.push_back(cur);
    const auto& ch = node(cur).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) work.push_back(*it);
  }
  return out;
}

std::vector<ThreadId> RtState::subtree_threads(std::int64_t root_id) const {
  std::vector<ThreadId> out;
  for (std::int64_t id : subtree(root_id)) {
    const auto& ts = node(id).threads;
    out.insert(out.end(), ts.begin(), ts.end());
  }
  return out;
}

bool RtState::commit_enabled(std::int64_t id) const {
  if (id == kRootNode || !has_node(id)) return false;
  const Node& n = node(id);
  return std::find(n.cos.begin(), n.cos.end(), n.txn) != n.cos.end();
}

std::vector<std::int64_t> RtState::live_txns() const {
  std::vector<std::int64_t> out;
  for (const auto& [id, n] : nodes)
    if (id != kRootNode) out.push_back(id);
  return out;
}

void RtState::bump_activity(std::int64_t id) {
  for (std::int64_t cur = id; cur != kNoParent; cur = node(cur).parent)
    node(cur).last_activity = now;
}

void RtState::add_thread(ThreadId t, std::int64_t node_id) {
  require(threads.count(t) == 0, "thread id reused");
  ThreadRec r;
  r.node = node_id;
  threads.emplace(t, std::move(r));
  attach_thread(t, node_id);
  ++version;
}

void RtState::spawn(ThreadId parent, ThreadId child) {
  add_thread(child, rec(parent).node);
  ++metrics.spawns;
}

void RtState::txn_start(ThreadId t, const TxnId& k) {
  require(!has_node(k.inst), "transaction instance reused");
  ThreadRec& r = rec(t);
  Node child;
  child.txn = k;
  child.parent = r.node;
  child.last_activity = now;
  nodes.emplace(k.inst, std::move(child));
  node(r.node).children.push_back(k.inst);
  detach_thread(t);
  attach_thread(t, k.inst);
  r.node = k.inst;
  r.mirror.insert(r.mirror.begin(), MirrorEntry{k, {}});
  bump_activity(k.inst);
  ++metrics.txn_starts;
  ++version;
}

void RtState::register_co(ThreadId t, const TxnId& k) {
  std::int64_t id = rec(t).node;
  node(id).cos.push_back(k);
  bump_activity(id);
  ++metrics.cos;
  ++version;
}

void RtState::block(ThreadId t, BlockInfo info) {
  ThreadRec& r = rec(t);
  require(r.alive, "blocking a dead thread");
  r.blocked = std::move(info);
  ++version;
}

void RtState::finish(ThreadId t, ValuePtr v) {
  ThreadRec& r = rec(t);
  require(r.alive, "finishing a dead thread");
  r.finished = std::move(v);
  r.blocked.reset();
  ++version;
}

void RtState::resume(ThreadId t) {
  ThreadRec& r = rec(t);
  r.blocked.reset();
  r.finished.reset();
  ++version;
}

EmbedPush RtState::embed_thread(ThreadId t, std::int64_t k) {
  ThreadRec& r = rec(t);
  require(r.alive, "embedding a dead thread");
  require(r.node == node(k).parent, "embed source must be the target's sibling level");
  detach_thread(t);
  attach_thread(t, k);
  r.node = k;
  r.mirror.insert(r.mirror.begin(), MirrorEntry{node(k).txn, {}});
  bump_activity(k);
  ++metrics.embeds;
  ++version;
  return EmbedPush{t, 0};
}

std::vector<EmbedPush> RtState::embed_txn(std::int64_t m, std::int64_t k) {
  require(m != k, "cannot embed a transaction into itself");
  require(node(m).parent == node(k).parent, "embed source must be the target's sibling level");
  NodeSnapshot snap = capture(m);
  node(k).alt_txns.push_back(snap);

  Node& oldp = node(node(m).parent);
  oldp.children.erase(std::find(oldp.children.begin(), oldp.children.end(), m));
  node(m).parent = k;
  node(k).children.push_back(m);

  std::vector<EmbedPush> pushes;
  TxnId ktxn = node(k).txn;
  std::vector<std::int64_t> moved_ids = subtree(m);
  auto in_moved = [&](const TxnId& t) {
    return std::find(moved_ids.begin(), moved_ids.end(), t.inst) != moved_ids.end();
  };
  for (ThreadId u : subtree_threads(m)) {
    ThreadRec& r = rec(u);
    // Entries for transactions inside the moved subtree stay innermost; the
    // new entry goes right after them so the stack keeps mirroring the path.
    // Threads born inside a transaction hold no entry for it, so the count
    // runs over mirror entries, not over path depth.
    int pos = 0;
    while (pos < static_cast<int>(r.mirror.size()) && in_moved(r.mirror[pos].txn))
      ++pos;
    std::vector<MirrorEntry> inner(r.mirror.begin(), r.mirror.begin() + pos);
    r.mirror.insert(r.mirror.begin() + pos, MirrorEntry{ktxn, std::move(inner)});
    pushes.push_back(EmbedPush{u, pos});
  }
  bump_activity(m);
  ++metrics.embeds;
  ++version;
  return pushes;
}

std::vector<ThreadId> RtState::commit(std::int64_t k) {
  require(commit_enabled(k), "commit without a matching co token");
  Node& n = node(k);
  TxnId ktxn = n.txn;
  std::int64_t p = n.parent;

  std::vector<ThreadId> moved(n.threads.begin(), n.threads.end());
  for (ThreadId t : moved) {
    detach_thread(t);
    attach_thread(t, p);
    rec(t).node = p;
  }
  std::vector<std::int64_t> kids = n.children;
  for (std::int64_t c : kids) {
    node(c).parent = p;
    node(p).children.push_back(c);
  }
  for (const TxnId& co : n.cos)
    if (!(co == ktxn)) node(p).cos.push_back(co);
  // Tokens for the dissolved transaction can never fire again; drop stray
  // copies that ended up deeper in the subtree.
  for (std::int64_t c : kids) erase_cos_deep(c, ktxn);

  std::vector<ThreadId> drops;
  for (auto& [t, r] : threads) {
    auto it = std::find_if(r.mirror.begin(), r.mirror.end(),
                           [&](const MirrorEntry& e) { return e.txn == ktxn; });
    if (it != r.mirror.end()) {
      r.mirror.erase(it);
      drops.push_back(t);
    }
    if (!r.alive && r.node == k) r.node = p;
  }

  Node& pn = node(p);
  pn.children.erase(std::find(pn.children.begin(), pn.children.end(), k));
  nodes.erase(k);
  bump_activity(p);
  ++metrics.commits;
  ++version;
  return drops;
}

AbortPlan RtState::abort(std::int64_t k) {
  Node& n = node(k);
  TxnId ktxn = n.txn;
  std::int64_t p = n.parent;
  std::vector<NodeSnapshot> saved = n.alt_txns;
  std::vector<std::int64_t> sub = subtree(k);

  // The frozen copies know where each embedded thread sat at capture time;
  // that placement is authoritative when the copy is restored. Threads that
  // entered k directly (atomic initiator, plain thread embeds) appear in no
  // snapshot and go back to k's parent.
  std::map<ThreadId, std::int64_t> snap_home;
  auto index_snap = [&](auto&& self, const NodeSnapshot& s) -> void {
    for (ThreadId t : s.threads) snap_home[t] = s.txn.inst;
    for (const NodeSnapshot& c : s.children) self(self, c);
  };
  for (const NodeSnapshot& s : saved) index_snap(index_snap, s);

  AbortPlan plan;
  // Threads holding an entry for k roll back to the state frozen when that
  // entry was pushed; this includes threads killed later by inner aborts,
  // whose frozen copies come back to life here.
  std::vector<std::pair<ThreadId, std::size_t>> restore_idx;
  for (auto& [t, r] : threads) {
    auto it = std::find_if(r.mirror.begin(), r.mirror.end(),
                           [&](const MirrorEntry& e) { return e.txn == ktxn; });
    if (it != r.mirror.end()) {
      if (r.alive)
        require(in_subtree(r.node, k), "live thread with entry for k outside k");
      restore_idx.emplace_back(t, static_cast<std::size_t>(it - r.mirror.begin()));
    } else if (r.alive && in_subtree(r.node, k)) {
      plan.kills.push_back(t);
    }
  }

  for (ThreadId t : plan.kills) {
    ThreadRec& r = rec(t);
    detach_thread(t);
    r.alive = false;
    r.blocked.reset();
    r.finished.reset();
    r.node = p;
    ++r.epoch;
    ++metrics.kills;
  }
  // Dead threads may hold entries for transactions inside the discarded
  // subtree. Those frozen copies lived in k's default world and die with
  // it; keeping the entries would let a later abort of a rebuilt copy
  // revive threads that no alternative ever captured.
  {
    auto in_sub = [&](const TxnId& txn) {
      return std::find(sub.begin(), sub.end(), txn.inst) != sub.end();
    };
    for (auto& [t, r] : threads) {
      if (r.alive) continue;
      bool restoring =
          std::any_of(restore_idx.begin(), restore_idx.end(),
                      [&](const auto& pr) { return pr.first == t; });
      if (restoring) continue;
      std::erase_if(r.mirror,
                    [&](const MirrorEntry& e) { return in_sub(e.txn); });
    }
  }
  for (auto& [t, idx] : restore_idx) {
    (void)idx;
    ThreadRec& r = rec(t);
    if (r.alive) detach_thread(t);
  }
  for (auto& [t, r] : threads) {
    if (!r.alive && r.node != kRootNode && !has_node(r.node)) r.node = p;
    if (!r.alive) {
      for (std::int64_t s : sub)
        if (r.node == s) r.node = p;
    }
  }

  Node& pn = node(p);
  pn.children.erase(std::find(pn.children.begin(), pn.children.end(), k));
  for (std::int64_t id : sub) nodes.erase(id);

  for (const NodeSnapshot& snap : saved) {
    rebuild(snap, p);
    for (std::int64_t id : subtree(snap.txn.inst)) plan.rebuilt.push_back(id);
  }

  for (auto& [t, idx] : restore_idx) {
    ThreadRec& r = rec(t);
    MirrorEntry entry = r.mirror[idx];
    std::vector<MirrorEntry> rest(r.mirror.begin() + idx + 1, r.mirror.end());
    r.mirror = entry.inner;
    r.mirror.insert(r.mirror.end(), rest.begin(), rest.end());
    auto home = snap_home.find(t);
    std::int64_t target = home == snap_home.end() ? p : home->second;
    require(has_node(target), "restored thread's transaction was not rebuilt");
    bool was_alive = r.alive;
    r.node = target;
    r.alive = true;
    r.blocked.reset();
    r.finished.reset();
    ++r.epoch;
    attach_thread(t, target);
    if (!was_alive) ++metrics.revivals;
    plan.restores.push_back(RestoreSpec{t, target, was_alive});
  }

  bump_activity(p);
  ++metrics.aborts;
  ++version;
  return plan;
}

NodeSnapshot RtState::capture(std::int64_t id) const {
  const Node& n = node(id);
  NodeSnapshot snap;
  snap.txn = n.txn;
  snap.cos = n.cos;
  snap.threads = n.threads;
  for (std::int64_t c : n.children) snap.children.push_back(capture(c));
  snap.alt_txns = n.alt_txns;
  return snap;
}

std::int64_t RtState::rebuild(const NodeSnapshot& snap, std::int64_t parent_id) {
  require(!has_node(snap.txn.inst), "rebuild would duplicate a transaction");
  Node n;
  n.txn = snap.txn;
  n.parent = parent_id;
  n.cos = snap.cos;
  n.alt_txns = snap.alt_txns;
  n.last_activity = now;
  nodes.emplace(snap.txn.inst, std::move(n));
  node(parent_id).children.push_back(snap.txn.inst);
  for (const NodeSnapshot& c : snap.children) rebuild(c, snap.txn.inst);
  return snap.txn.inst;
}

void RtState::erase_cos_deep(std::int64_t id, const TxnId& k) {
  Node& n = node(id);
  n.cos.erase(std::remove(n.cos.begin(), n.cos.end(), k), n.cos.end());
  for (std::int64_t c : n.children) erase_cos_deep(c, k);
}

void RtState::detach_thread(ThreadId t) {
  remove_sorted(node(rec(t).node).threads, t);
}

void RtState::attach_thread(ThreadId t, std::int64_t node_id) {
  insert_sorted(node(node_id).threads, t);
  rec(t).node = node_id;
}

void RtState::check_invariants() const {
  require(nodes.count(kRootNode) == 1, "missing root");
  for (const auto& [id, n] : nodes) {
    if (id != kRootNode) {
      require(n.txn.inst == id, "node key does not match its transaction");
      const Node& p = node(n.parent);
      require(std::count(p.children.begin(), p.children.end(), id) == 1,
              "parent does not list child exactly once");
    }
    for (std::int64_t c : n.children)
      require(node(c).parent == id, "child does not point back to parent");
    for (ThreadId t : n.threads) {
      const ThreadRec& r = rec(t);
      require(r.alive, "dead thread still attached");
      require(r.node == id, "thread record disagrees with node list");
    }
  }
  for (const auto& [t, r] : threads) {
    if (!r.alive) continue;
    const auto& ts = node(r.node).threads;
    require(std::count(ts.begin(), ts.end(), t) == 1, "live thread not attached once");
    if (r.outstanding == 0) {
      // The mirror names an ordered subsequence of the path, innermost
      // first. Threads born inside a transaction hold no entry for it, so
      // equality is too strong; every held entry must lie on the path and
      // in path order.
      std::vector<TxnId> p = path(r.node);
      std::reverse(p.begin(), p.end());
      std::size_t pi = 0;
      for (const MirrorEntry& e : r.mirror) {
        while (pi < p.size() && !(p[pi] == e.txn)) ++pi;
        if (pi >= p.size()) {
          std::fprintf(stderr, "thread %lld at node %lld\n",
                       static_cast<long long>(t),
                       static_cast<long long>(r.node));
          std::fprintf(stderr, "  path:");
          for (const TxnId& q : p) std::fprintf(stderr, " %s", q.show().c_str());
          std::fprintf(stderr, "\n  mirror:");
          for (const MirrorEntry& m : r.mirror)
            std::fprintf(stderr, " %s", m.txn.show().c_str());
          std::fprintf(stderr, "\n");
          die("mirror entry not on the thread's path");
        }
        ++pi;
      }
    }
  }
}

}  // namespace tcml::rt
