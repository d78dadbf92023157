#include "tcml/sched.hpp"

#include <algorithm>
#include <map>

namespace tcml::rt {

std::optional<PolicyKind> parse_policy(const std::string& name) {
  if (name == "r") return PolicyKind::Random;
  if (name == "s") return PolicyKind::Staged;
  if (name == "cd") return PolicyKind::CommDriven;
  if (name == "da") return PolicyKind::DelayedAbort;
  return std::nullopt;
}

std::string policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::Random: return "r";
    case PolicyKind::Staged: return "s";
    case PolicyKind::CommDriven: return "cd";
    case PolicyKind::DelayedAbort: return "da";
  }
  return "?";
}

namespace {

// Blocked live threads at `id` and at its direct children, in node order.
std::vector<ThreadId> blocked_two_levels(const RtState& s, std::int64_t id) {
  std::vector<ThreadId> out;
  auto take = [&](std::int64_t n) {
    for (ThreadId t : s.node(n).threads)
      if (s.rec(t).blocked) out.push_back(t);
  };
  take(id);
  for (std::int64_t c : s.node(id).children) take(c);
  return out;
}

bool complementary_pair(const RtState& s, const std::vector<ThreadId>& left,
                        const std::vector<ThreadId>& right, ThreadId& t1,
                        ThreadId& t2, ChannelId& chan) {
  for (ThreadId a : left) {
    const BlockInfo& ba = *s.rec(a).blocked;
    for (ThreadId b : right) {
      const BlockInfo& bb = *s.rec(b).blocked;
      if (ba.chan == bb.chan && ba.is_send != bb.is_send) {
        t1 = a;
        t2 = b;
        chan = ba.chan;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

Candidates enumerate_candidates(const RtState& s) {
  Candidates out;
  for (const auto& [id, n] : s.nodes) {
    // Same-level complementary pairs only; cross-level pairs need embeds.
    std::map<std::int64_t, std::pair<std::vector<ThreadId>, std::vector<ThreadId>>>
        by_chan;
    for (ThreadId t : n.threads) {
      const ThreadRec& r = s.rec(t);
      if (!r.blocked) continue;
      auto& [senders, receivers] = by_chan[r.blocked->chan.v];
      (r.blocked->is_send ? senders : receivers).push_back(t);
    }
    for (const auto& [chan, pair] : by_chan) {
      for (ThreadId snd : pair.first)
        for (ThreadId rcv : pair.second) {
          Directive d;
          d.kind = Directive::Kind::Sync;
          d.sender = snd;
          d.receiver = rcv;
          d.chan = ChannelId{chan};
          out.syncs.push_back(d);
        }
    }

    if (id == kRootNode) continue;
    if (s.commit_enabled(id)) {
      Directive d;
      d.kind = Directive::Kind::Commit;
      d.txn = id;
      out.commits.push_back(d);
    }
    {
      Directive d;
      d.kind = Directive::Kind::Abort;
      d.txn = id;
      out.aborts.push_back(d);
    }
    // Embeds only target settled threads (blocked or finished). A running
    // thread may have entered a transaction the coordinator has not heard
    // about yet, and the stack positions in the push would be computed
    // against a stale picture.
    auto settled = [&](ThreadId t) {
      const ThreadRec& r = s.rec(t);
      return r.blocked.has_value() || r.finished != nullptr;
    };
    const Node& parent = s.node(n.parent);
    for (ThreadId t : parent.threads) {
      if (!settled(t)) continue;
      Directive d;
      d.kind = Directive::Kind::EmbedThread;
      d.txn = id;
      d.thread = t;
      out.embeds.push_back(d);
    }
    for (std::int64_t m : parent.children) {
      if (m == id) continue;
      bool all_settled = true;
      for (ThreadId t : s.subtree_threads(m))
        if (!settled(t)) all_settled = false;
      if (!all_settled) continue;
      Directive d;
      d.kind = Directive::Kind::EmbedTxn;
      d.txn = id;
      d.moved = m;
      out.embeds.push_back(d);
    }
  }
  return out;
}

void filter_embeds_comm_justified(const RtState& s, std::vector<Directive>& embeds) {
  std::vector<Directive> kept;
  for (Directive d : embeds) {
    std::vector<ThreadId> unit_side;
    if (d.kind == Directive::Kind::EmbedThread) {
      if (s.rec(d.thread).blocked) unit_side.push_back(d.thread);
    } else {
      unit_side = blocked_two_levels(s, d.moved);
    }
    if (unit_side.empty()) continue;
    std::vector<ThreadId> target_side = blocked_two_levels(s, d.txn);
    ThreadId t1, t2;
    ChannelId chan;
    if (complementary_pair(s, unit_side, target_side, t1, t2, chan)) {
      d.jt1 = t1;
      d.jt2 = t2;
      d.jchan = chan;
      kept.push_back(d);
    }
  }
  embeds = std::move(kept);
}

void filter_aborts_by_timer(const RtState& s, std::int64_t timeout_nanos,
                            std::vector<Directive>& aborts) {
  std::erase_if(aborts, [&](const Directive& d) {
    return s.now - s.node(d.txn).last_activity < timeout_nanos;
  });
}

namespace {

const Directive& pick(const std::vector<Directive>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, v.size() - 1);
  return v[dist(rng)];
}

}  // namespace

std::optional<Directive> policy_step(PolicyKind kind, const RtState& s,
                                     const PolicyConfig& cfg, Rng& rng,
                                     RtMetrics& metrics) {
  ++metrics.policy_invocations;
  Candidates c = enumerate_candidates(s);

  if (kind == PolicyKind::Random) {
    std::vector<Directive> all;
    all.insert(all.end(), c.syncs.begin(), c.syncs.end());
    all.insert(all.end(), c.commits.begin(), c.commits.end());
    all.insert(all.end(), c.embeds.begin(), c.embeds.end());
    all.insert(all.end(), c.aborts.begin(), c.aborts.end());
    // A runnable thread's next step is itself one of the equally likely
    // choices. Drawing one of those tickets means "issue nothing and let the
    // workers run"; without them every lone enabled abort would fire
    // instantly and no transaction could ever reach its commit.
    std::size_t run_tickets = 0;
    for (const auto& [t, rec] : s.threads)
      if (rec.alive && !rec.blocked && !rec.finished) ++run_tickets;
    if (all.empty() && run_tickets == 0) return std::nullopt;
    std::uniform_int_distribution<std::size_t> dist(
        0, all.size() + run_tickets - 1);
    std::size_t i = dist(rng);
    if (i >= all.size()) return std::nullopt;
    return all[i];
  }

  if (kind == PolicyKind::CommDriven || kind == PolicyKind::DelayedAbort)
    filter_embeds_comm_justified(s, c.embeds);
  if (kind == PolicyKind::DelayedAbort)
    filter_aborts_by_timer(s, cfg.da_timeout_nanos, c.aborts);

  // Staged order: communication first, then commits, then embeds. Aborts are
  // a last resort taken with small probability per transaction.
  if (!c.syncs.empty()) return pick(c.syncs, rng);
  if (!c.commits.empty()) return pick(c.commits, rng);
  if (!c.embeds.empty()) return pick(c.embeds, rng);
  if (c.aborts.empty()) return std::nullopt;

  std::shuffle(c.aborts.begin(), c.aborts.end(), rng);
  double denom = cfg.run_prob + cfg.abort_prob;
  double p = denom > 0 ? cfg.abort_prob / denom : 0.0;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (const Directive& d : c.aborts) {
    if (uni(rng) < p) {
      ++metrics.abort_decisions;
      return d;
    }
    ++metrics.run_decisions;
  }
  return std::nullopt;
}

}  // namespace tcml::rt
