#include "tcml/runtime.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>

#include "runtime_internal.hpp"
#include "tcml/errors.hpp"

namespace tcml::rt {

// ---------------------------------------------------------------------------
// WorkerCore

Effect WorkerCore::run(int max_pure_steps, std::int64_t* pure_counter) {
  int steps = 0;
  for (;;) {
    if (steps >= max_pure_steps) return Effect{};  // Paused
    Decomposition d = decompose(expr_);
    if (d.value) {
      Effect eff;
      eff.kind = Effect::Kind::Finished;
      eff.value = *d.value;
      return eff;
    }
    switch (d.redex_kind) {
      case RedexKind::Beta:
      case RedexKind::Delta:
      case RedexKind::LetR:
      case RedexKind::IfR:
        try {
          expr_ = plug(d.ctx, step_pure_redex(d.redex, d.redex_kind));
        } catch (const Error& e) {
          Effect eff;
          eff.kind = Effect::Kind::Stuck;
          eff.error = e.what();
          return eff;
        }
        ++steps;
        if (pure_counter) ++*pure_counter;
        break;
      case RedexKind::FlipR: {
        bool heads = (flip_rng_() & 1) != 0;
        expr_ = plug(d.ctx, e_bool(heads));
        ++steps;
        if (pure_counter) ++*pure_counter;
        break;
      }
      case RedexKind::NewChanR: {
        // Fresh ids come from a shared counter; no coordinator round trip.
        ChannelId c{ids_->next_chan.fetch_add(1)};
        expr_ = plug(d.ctx, e_val(v_chan(c)));
        ++steps;
        if (pure_counter) ++*pure_counter;
        break;
      }
      case RedexKind::SpawnR: {
        Effect eff;
        eff.kind = Effect::Kind::Spawned;
        eff.child = ids_->next_thread.fetch_add(1);
        eff.thunk = *as_value(d.redex->a);
        expr_ = plug(d.ctx, e_unit());
        return eff;
      }
      case RedexKind::AtomicR: {
        TxnId k{ids_->next_txn.fetch_add(1), d.redex->txn_binder};
        // The alternative freezes the whole current expression with the
        // default replaced by the fallback branch.
        stack_.insert(stack_.begin(), WAlt{k, plug(d.ctx, d.redex->b), {}});
        expr_ = plug(d.ctx, substitute_txn(d.redex->a, d.redex->txn_binder, k));
        Effect eff;
        eff.kind = Effect::Kind::TxnStarted;
        eff.txn = k;
        return eff;
      }
      case RedexKind::CommitR: {
        if (!d.redex->txn.resolved()) {
          Effect eff;
          eff.kind = Effect::Kind::Stuck;
          eff.error = "commit of an unresolved transaction name";
          return eff;
        }
        Effect eff;
        eff.kind = Effect::Kind::CoSpawned;
        eff.txn = d.redex->txn.id();
        expr_ = plug(d.ctx, e_unit());
        return eff;
      }
      case RedexKind::SendR:
      case RedexKind::RecvR: {
        ValuePtr target = *as_value(d.redex->a);
        if (target->kind != Value::Kind::Chan) {
          Effect eff;
          eff.kind = Effect::Kind::Stuck;
          eff.error = "communication on a non-channel value";
          return eff;
        }
        Effect eff;
        eff.kind = Effect::Kind::Blocked;
        eff.chan = target->chan;
        eff.is_send = d.redex_kind == RedexKind::SendR;
        if (eff.is_send) eff.payload = *as_value(d.redex->b);
        parked_ = std::move(d);
        return eff;
      }
    }
  }
}

void WorkerCore::deliver_recv(const ValuePtr& v) {
  expr_ = plug(parked_->ctx, e_val(v));
  parked_.reset();
}

void WorkerCore::deliver_send() {
  expr_ = plug(parked_->ctx, e_unit());
  parked_.reset();
}

void WorkerCore::push_alt(const TxnId& k, int pos) {
  std::vector<WAlt> inner(stack_.begin(), stack_.begin() + pos);
  stack_.insert(stack_.begin() + pos, WAlt{k, expr_, std::move(inner)});
}

void WorkerCore::drop_alt(const TxnId& k) {
  auto it = std::find_if(stack_.begin(), stack_.end(),
                         [&](const WAlt& a) { return a.txn == k; });
  if (it != stack_.end()) stack_.erase(it);
}

void WorkerCore::rollback(const TxnId& k) {
  auto it = std::find_if(stack_.begin(), stack_.end(),
                         [&](const WAlt& a) { return a.txn == k; });
  if (it == stack_.end()) return;
  WAlt entry = *it;
  std::vector<WAlt> rest(it + 1, stack_.end());
  expr_ = entry.saved;
  stack_ = entry.inner;
  stack_.insert(stack_.end(), rest.begin(), rest.end());
  parked_.reset();
}

std::vector<TxnId> WorkerCore::stack_names() const {
  std::vector<TxnId> out;
  out.reserve(stack_.size());
  for (const WAlt& a : stack_) out.push_back(a.txn);
  return out;
}

// ---------------------------------------------------------------------------
// Gatherer

Gatherer::Gatherer(const RunConfig& cfg, IdSource*)
    : cfg_(cfg), log_(cfg.collect_trace), policy_rng_(cfg.seed ^ 0x5bd1e995) {}

void Gatherer::emit(const char* kind, ThreadId thread, const std::string& txn,
                    const std::string& path,
                    std::vector<std::pair<std::string, std::string>> extra) {
  TraceEvent ev;
  ev.wall_nanos = st_.now;
  ev.kind = kind;
  ev.thread = thread;
  ev.txn = txn;
  ev.path = path;
  ev.extra = std::move(extra);
  log_.push(std::move(ev));
}

void Gatherer::on_root(ThreadId t) { st_.add_thread(t, kRootNode); }

void Gatherer::on_spawn(ThreadId parent, ThreadId child) {
  st_.spawn(parent, child);
  emit("spawn", child, "", st_.path_string(st_.rec(child).node),
       {{"parent", std::to_string(parent)}});
}

void Gatherer::on_txn_start(ThreadId t, const TxnId& k) {
  st_.txn_start(t, k);
  emit("txn_start", t, k.show(), st_.path_string(k.inst),
       {{"src", k.src.str()}});
}

void Gatherer::on_co(ThreadId t, const TxnId& k) {
  st_.register_co(t, k);
  emit("co", t, k.show(), st_.path_string(st_.rec(t).node));
}

void Gatherer::on_block(ThreadId t, ChannelId c, bool is_send, ValuePtr payload) {
  BlockInfo info;
  info.chan = c;
  info.is_send = is_send;
  info.payload = std::move(payload);
  st_.block(t, std::move(info));
}

void Gatherer::on_finish(ThreadId t, ValuePtr v) {
  st_.finish(t, v);
  emit("finish", t, "", st_.path_string(st_.rec(t).node),
       {{"value", print_value(v)}});
}

void Gatherer::on_stale(ThreadId t, const char* what) {
  ++st_.metrics.stale_drops;
  emit("stale_drop", t, "", "", {{"what", what}});
}

std::optional<Directive> Gatherer::poll_policy() {
  return policy_step(cfg_.policy, st_, cfg_.policy_cfg, policy_rng_,
                     st_.metrics);
}

bool Gatherer::validate(const Directive& d) const {
  switch (d.kind) {
    case Directive::Kind::Sync: {
      if (!st_.threads.count(d.sender) || !st_.threads.count(d.receiver))
        return false;
      const ThreadRec& s = st_.rec(d.sender);
      const ThreadRec& r = st_.rec(d.receiver);
      return s.alive && r.alive && s.blocked && r.blocked &&
             s.blocked->is_send && !r.blocked->is_send &&
             s.blocked->chan == d.chan && r.blocked->chan == d.chan &&
             s.node == r.node;
    }
    case Directive::Kind::Commit:
      return st_.commit_enabled(d.txn);
    case Directive::Kind::Abort:
      return st_.has_node(d.txn);
    case Directive::Kind::EmbedThread:
      return st_.has_node(d.txn) && st_.threads.count(d.thread) &&
             st_.rec(d.thread).alive &&
             st_.rec(d.thread).node == st_.node(d.txn).parent;
    case Directive::Kind::EmbedTxn:
      return st_.has_node(d.txn) && st_.has_node(d.moved) && d.txn != d.moved &&
             st_.node(d.moved).parent == st_.node(d.txn).parent;
  }
  return false;
}

Gatherer::Applied Gatherer::apply(const Directive& d) {
  Applied out;
  out.d = d;
  if (!validate(d)) {
    // Cannot happen while the policy runs inline with mutation, but the
    // revalidation stays: a dropped directive is counted, not applied.
    out.stale = true;
    ++st_.metrics.stale_drops;
    emit("stale_drop", -1, "", "", {{"what", "directive"}});
    return out;
  }
  ++st_.metrics.directives;
  switch (d.kind) {
    case Directive::Kind::Sync: {
      out.payload = st_.rec(d.sender).blocked->payload;
      std::string path = st_.path_string(st_.rec(d.sender).node);
      st_.resume(d.sender);
      st_.resume(d.receiver);
      st_.bump_activity(st_.rec(d.sender).node);
      ++st_.metrics.syncs;
      emit("sync", d.sender, "", path,
           {{"chan", std::to_string(d.chan.v)},
            {"receiver", std::to_string(d.receiver)}});
      break;
    }
    case Directive::Kind::Commit: {
      out.txn = st_.node(d.txn).txn;
      std::string path = st_.path_string(d.txn);
      out.drops = st_.commit(d.txn);
      emit("commit", -1, out.txn.show(), path, {{"src", out.txn.src.str()}});
      break;
    }
    case Directive::Kind::Abort: {
      out.txn = st_.node(d.txn).txn;
      std::string path = st_.path_string(d.txn);
      out.abort_plan = st_.abort(d.txn);
      emit("abort", -1, out.txn.show(), path,
           {{"restored", std::to_string(out.abort_plan.restores.size())},
            {"killed", std::to_string(out.abort_plan.kills.size())}});
      for (ThreadId t : out.abort_plan.kills)
        emit("kill", t, "", st_.path_string(st_.rec(t).node));
      // Rebuilt transactions reappear in the trace so that a replay can
      // track the tree shape without access to runtime state.
      for (std::int64_t id : out.abort_plan.rebuilt) {
        TxnId k = st_.node(id).txn;
        emit("txn_start", -1, k.show(), st_.path_string(id),
             {{"restored", "1"}, {"src", k.src.str()}});
      }
      break;
    }
    case Directive::Kind::EmbedThread: {
      out.txn = st_.node(d.txn).txn;
      out.pushes.push_back(st_.embed_thread(d.thread, d.txn));
      std::vector<std::pair<std::string, std::string>> extra{
          {"unit", std::to_string(d.thread)}, {"unit_kind", "thread"}};
      if (d.jt1 >= 0) {
        extra.emplace_back("jt1", std::to_string(d.jt1));
        extra.emplace_back("jt2", std::to_string(d.jt2));
        extra.emplace_back("jchan", std::to_string(d.jchan.v));
      }
      emit("embed", d.thread, out.txn.show(), st_.path_string(d.txn),
           std::move(extra));
      break;
    }
    case Directive::Kind::EmbedTxn: {
      out.txn = st_.node(d.txn).txn;
      TxnId moved = st_.node(d.moved).txn;
      out.pushes = st_.embed_txn(d.moved, d.txn);
      std::vector<std::pair<std::string, std::string>> extra{
          {"unit", moved.show()}, {"unit_kind", "txn"}};
      if (d.jt1 >= 0) {
        extra.emplace_back("jt1", std::to_string(d.jt1));
        extra.emplace_back("jt2", std::to_string(d.jt2));
        extra.emplace_back("jchan", std::to_string(d.jchan.v));
      }
      emit("embed", -1, out.txn.show(), st_.path_string(d.txn),
           std::move(extra));
      break;
    }
  }
  return out;
}

bool Gatherer::runnable(ThreadId t) const {
  const ThreadRec& r = st_.rec(t);
  return r.alive && !r.blocked && !r.finished;
}

bool Gatherer::quiescent() const {
  for (const auto& [t, r] : st_.threads)
    if (r.alive && !r.blocked && !r.finished) return false;
  if (st_.nodes.size() > 1) return false;  // live transactions remain
  return enumerate_candidates(st_).syncs.empty();
}

std::string Gatherer::outcome() const {
  std::vector<std::string> parts;
  PrintOptions opts;
  // Channel identity is erased: a trapped channel value prints uniformly.
  opts.chan_name = [](ChannelId) { return std::string("<chan>"); };
  for (const auto& [t, r] : st_.threads) {
    (void)t;
    if (r.alive && r.finished && r.node == kRootNode)
      parts.push_back(print_value(r.finished, opts));
  }
  return format_outcome(std::move(parts));
}

std::string format_outcome(std::vector<std::string> parts) {
  std::sort(parts.begin(), parts.end());
  std::string out = "{";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  out += "}";
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic simulation executor

namespace {

constexpr std::int64_t kVirtualNanosPerStep = 1'000'000;  // one virtual ms

std::uint64_t flip_seed_for(std::uint64_t seed, ThreadId t) {
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL * (t + 1);
  x ^= x >> 29;
  return x;
}

}  // namespace

RunResult run_sim(const ExprPtr& program, const RunConfig& cfg) {
  IdSource ids;
  Gatherer g(cfg, &ids);
  std::map<ThreadId, std::unique_ptr<WorkerCore>> workers;
  std::deque<ThreadId> ready;
  std::map<ThreadId, bool> queued;

  RunResult result;

  auto enqueue = [&](ThreadId t) {
    if (!queued[t] && g.runnable(t)) {
      ready.push_back(t);
      queued[t] = true;
    }
  };

  ThreadId root = ids.next_thread.fetch_add(1);
  workers.emplace(root, std::make_unique<WorkerCore>(
                            root, program, &ids, flip_seed_for(cfg.seed, root)));
  g.on_root(root);
  enqueue(root);

  auto deliver = [&](const Gatherer::Applied& a) {
    if (a.stale) return;
    switch (a.d.kind) {
      case Directive::Kind::Sync:
        workers.at(a.d.sender)->deliver_send();
        workers.at(a.d.receiver)->deliver_recv(a.payload);
        enqueue(a.d.sender);
        enqueue(a.d.receiver);
        break;
      case Directive::Kind::EmbedThread:
      case Directive::Kind::EmbedTxn:
        for (const EmbedPush& p : a.pushes)
          workers.at(p.thread)->push_alt(a.txn, p.pos);
        break;
      case Directive::Kind::Commit:
        for (ThreadId t : a.drops) workers.at(t)->drop_alt(a.txn);
        break;
      case Directive::Kind::Abort:
        for (const RestoreSpec& r : a.abort_plan.restores) {
          workers.at(r.thread)->rollback(a.txn);
          enqueue(r.thread);
        }
        // Killed workers keep their stacks: an outer abort may revive them
        // from a frozen copy later.
        break;
    }
  };

  auto pump_policy = [&]() {
    for (int i = 0; i < 8; ++i) {
      std::optional<Directive> d = g.poll_policy();
      if (!d) break;
      deliver(g.apply(*d));
    }
  };

  std::int64_t step = 0;
  for (; step < cfg.max_virtual_steps; ++step) {
    g.st().now = step * kVirtualNanosPerStep;
    if ((step & 63) == 0) g.st().check_invariants();
    if (ready.empty()) {
      if (g.quiescent()) break;
      pump_policy();
      bool any_ready = !ready.empty();
      bool any_txn = g.st().nodes.size() > 1;
      if (!any_ready && !any_txn && g.quiescent()) break;
      continue;
    }
    ThreadId t = ready.front();
    ready.pop_front();
    queued[t] = false;
    if (!g.runnable(t)) continue;
    Effect eff = workers.at(t)->run(cfg.pure_slice, &g.st().metrics.pure_steps);
    switch (eff.kind) {
      case Effect::Kind::Paused:
        enqueue(t);
        break;
      case Effect::Kind::Spawned: {
        workers.emplace(eff.child,
                        std::make_unique<WorkerCore>(
                            eff.child, e_app(e_val(eff.thunk), e_unit()), &ids,
                            flip_seed_for(cfg.seed, eff.child)));
        g.on_spawn(t, eff.child);
        enqueue(eff.child);
        enqueue(t);
        break;
      }
      case Effect::Kind::TxnStarted:
        g.on_txn_start(t, eff.txn);
        enqueue(t);
        break;
      case Effect::Kind::CoSpawned:
        g.on_co(t, eff.txn);
        enqueue(t);
        break;
      case Effect::Kind::Blocked:
        g.on_block(t, eff.chan, eff.is_send, eff.payload);
        break;
      case Effect::Kind::Finished:
        g.on_finish(t, eff.value);
        break;
      case Effect::Kind::Stuck:
        result.error = eff.error;
        result.metrics = g.st().metrics;
        result.events = g.log().events();
        return result;
    }
    pump_policy();
  }

  result.quiescent = g.quiescent();
  result.timed_out = !result.quiescent && step >= cfg.max_virtual_steps;
  if (result.quiescent) result.outcome = g.outcome();
  result.metrics = g.st().metrics;
  result.events = g.log().events();
  g.st().check_invariants();
  return result;
}

std::string RunResult::trace_ndjson() const {
  std::string out;
  for (const auto& ev : events) {
    out += ev.to_line();
    out += '\n';
  }
  return out;
}

RunResult run_program(const ExprPtr& program, const RunConfig& cfg) {
  if (cfg.deterministic) return run_sim(program, cfg);
  return run_threaded(program, cfg);
}

}  // namespace tcml::rt
