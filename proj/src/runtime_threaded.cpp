#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "runtime_internal.hpp"

namespace tcml::rt {

namespace {

struct DirectiveMsg {
  enum class Kind { SyncSend, SyncRecv, Push, Drop, Rollback, Kill, Stop };
  Kind kind = Kind::Stop;
  ValuePtr payload;  // SyncRecv
  TxnId txn;
  int pos = 0;
  std::int64_t epoch = 0;  // Rollback / Kill
};

struct NotifMsg {
  ThreadId t = -1;
  std::int64_t epoch = 0;
  bool is_ack = false;
  std::vector<TxnId> stack;  // carried by acks for the mirror check
  Effect eff;
};

class NotifQueue {
 public:
  void push(NotifMsg m) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      q_.push_back(std::move(m));
    }
    cv_.notify_one();
  }
  std::optional<NotifMsg> pop(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(mu_);
    if (!cv_.wait_for(lk, timeout, [&] { return !q_.empty(); }))
      return std::nullopt;
    NotifMsg m = std::move(q_.front());
    q_.pop_front();
    return m;
  }
  bool empty() {
    std::lock_guard<std::mutex> lk(mu_);
    return q_.empty();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<NotifMsg> q_;
};

class Mailbox {
 public:
  void push(DirectiveMsg m) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      q_.push_back(std::move(m));
    }
    cv_.notify_one();
  }
  std::deque<DirectiveMsg> drain_nowait() {
    std::lock_guard<std::mutex> lk(mu_);
    std::deque<DirectiveMsg> out;
    out.swap(q_);
    return out;
  }
  std::deque<DirectiveMsg> wait_drain() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return !q_.empty(); });
    std::deque<DirectiveMsg> out;
    out.swap(q_);
    return out;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<DirectiveMsg> q_;
};

struct WorkerContext {
  WorkerContext(ThreadId id, ExprPtr e, IdSource* ids, std::uint64_t flip_seed)
      : core(id, std::move(e), ids, flip_seed) {}
  WorkerCore core;
  Mailbox mb;
  std::int64_t epoch = 0;
  bool parked = false;
  bool dead = false;
  std::int64_t pure_steps = 0;
  std::thread th;
};

void worker_main(WorkerContext* w, NotifQueue* notif, int slice) {
  auto ack = [&] {
    NotifMsg m;
    m.t = w->core.id();
    m.epoch = w->epoch;
    m.is_ack = true;
    m.stack = w->core.stack_names();
    notif->push(std::move(m));
  };
  for (;;) {
    std::deque<DirectiveMsg> msgs =
        (w->parked || w->dead) ? w->mb.wait_drain() : w->mb.drain_nowait();
    for (DirectiveMsg& m : msgs) {
      switch (m.kind) {
        case DirectiveMsg::Kind::Stop:
          return;
        case DirectiveMsg::Kind::SyncSend:
          w->core.deliver_send();
          w->parked = false;
          ack();
          break;
        case DirectiveMsg::Kind::SyncRecv:
          w->core.deliver_recv(m.payload);
          w->parked = false;
          ack();
          break;
        case DirectiveMsg::Kind::Push:
          w->core.push_alt(m.txn, m.pos);
          ack();
          break;
        case DirectiveMsg::Kind::Drop:
          w->core.drop_alt(m.txn);
          ack();
          break;
        case DirectiveMsg::Kind::Rollback:
          w->core.rollback(m.txn);
          w->epoch = m.epoch;
          w->parked = false;
          w->dead = false;
          ack();
          break;
        case DirectiveMsg::Kind::Kill:
          w->epoch = m.epoch;
          w->dead = true;
          w->parked = false;
          ack();
          break;
      }
    }
    if (w->parked || w->dead) continue;
    Effect eff = w->core.run(slice, &w->pure_steps);
    if (eff.kind == Effect::Kind::Paused) continue;
    if (eff.kind == Effect::Kind::Blocked ||
        eff.kind == Effect::Kind::Finished ||
        eff.kind == Effect::Kind::Stuck)
      w->parked = true;
    NotifMsg m;
    m.t = w->core.id();
    m.epoch = w->epoch;
    m.eff = std::move(eff);
    notif->push(std::move(m));
  }
}

std::uint64_t flip_seed_for_threaded(std::uint64_t seed, ThreadId t) {
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL * (t + 1);
  x ^= x >> 29;
  return x;
}

}  // namespace

RunResult run_threaded(const ExprPtr& program, const RunConfig& cfg) {
  IdSource ids;
  Gatherer g(cfg, &ids);
  NotifQueue notif;
  std::map<ThreadId, std::unique_ptr<WorkerContext>> ws;
  RunResult result;

  auto start_worker = [&](ThreadId t, ExprPtr e) {
    auto wc = std::make_unique<WorkerContext>(
        t, std::move(e), &ids, flip_seed_for_threaded(cfg.seed, t));
    WorkerContext* p = wc.get();
    ws.emplace(t, std::move(wc));
    p->th = std::thread(worker_main, p, &notif, cfg.pure_slice);
  };

  auto send_directive = [&](ThreadId t, DirectiveMsg m) {
    ++g.st().rec(t).outstanding;
    ws.at(t)->mb.push(std::move(m));
  };

  auto deliver = [&](const Gatherer::Applied& a) {
    if (a.stale) return;
    switch (a.d.kind) {
      case Directive::Kind::Sync: {
        DirectiveMsg ms;
        ms.kind = DirectiveMsg::Kind::SyncSend;
        send_directive(a.d.sender, std::move(ms));
        DirectiveMsg mr;
        mr.kind = DirectiveMsg::Kind::SyncRecv;
        mr.payload = a.payload;
        send_directive(a.d.receiver, std::move(mr));
        break;
      }
      case Directive::Kind::EmbedThread:
      case Directive::Kind::EmbedTxn:
        for (const EmbedPush& p : a.pushes) {
          DirectiveMsg m;
          m.kind = DirectiveMsg::Kind::Push;
          m.txn = a.txn;
          m.pos = p.pos;
          send_directive(p.thread, std::move(m));
        }
        break;
      case Directive::Kind::Commit:
        for (ThreadId t : a.drops) {
          DirectiveMsg m;
          m.kind = DirectiveMsg::Kind::Drop;
          m.txn = a.txn;
          send_directive(t, std::move(m));
        }
        break;
      case Directive::Kind::Abort:
        for (const RestoreSpec& r : a.abort_plan.restores) {
          DirectiveMsg m;
          m.kind = DirectiveMsg::Kind::Rollback;
          m.txn = a.txn;
          m.epoch = g.st().rec(r.thread).epoch;
          send_directive(r.thread, std::move(m));
        }
        for (ThreadId t : a.abort_plan.kills) {
          DirectiveMsg m;
          m.kind = DirectiveMsg::Kind::Kill;
          m.epoch = g.st().rec(t).epoch;
          send_directive(t, std::move(m));
        }
        break;
    }
  };

  using Clock = std::chrono::steady_clock;
  auto t0 = Clock::now();
  auto elapsed_nanos = [&] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                                t0)
        .count();
  };

  ThreadId root = ids.next_thread.fetch_add(1);
  g.on_root(root);
  start_worker(root, program);

  bool outstanding_any = false;
  for (;;) {
    std::optional<NotifMsg> msg = notif.pop(std::chrono::milliseconds(1));
    g.st().now = elapsed_nanos();
    if (msg) {
      ThreadRec& r = g.st().rec(msg->t);
      if (msg->is_ack) {
        --r.outstanding;
        if (r.outstanding == 0 && r.alive) {
          // Mirror invariant: at an acknowledged safe point a live worker's
          // stack names equal the coordinator's mirror, innermost first.
          // Killed workers keep their stacks for possible revival while the
          // coordinator prunes discarded entries, so they are exempt.
          bool same = r.mirror.size() == msg->stack.size();
          for (std::size_t i = 0; same && i < r.mirror.size(); ++i)
            same = r.mirror[i].txn == msg->stack[i];
          if (!same) {
            result.error = "mirror invariant violated at safe point";
            break;
          }
        }
      } else if (msg->epoch < r.epoch) {
        g.on_stale(msg->t, "notification");
      } else {
        switch (msg->eff.kind) {
          case Effect::Kind::Spawned:
            g.on_spawn(msg->t, msg->eff.child);
            start_worker(msg->eff.child,
                         e_app(e_val(msg->eff.thunk), e_unit()));
            break;
          case Effect::Kind::TxnStarted:
            g.on_txn_start(msg->t, msg->eff.txn);
            break;
          case Effect::Kind::CoSpawned:
            g.on_co(msg->t, msg->eff.txn);
            break;
          case Effect::Kind::Blocked:
            g.on_block(msg->t, msg->eff.chan, msg->eff.is_send,
                       msg->eff.payload);
            break;
          case Effect::Kind::Finished:
            g.on_finish(msg->t, msg->eff.value);
            break;
          case Effect::Kind::Stuck:
            result.error = msg->eff.error;
            break;
          case Effect::Kind::Paused:
            break;
        }
        if (!result.error.empty()) break;
      }
    }
    for (int i = 0; i < 8; ++i) {
      std::optional<Directive> d = g.poll_policy();
      if (!d) break;
      deliver(g.apply(*d));
    }
    if (g.st().now >= cfg.max_wall_millis * 1'000'000) {
      result.timed_out = true;
      break;
    }
    outstanding_any = false;
    for (const auto& [t, r] : g.st().threads)
      if (r.outstanding != 0) outstanding_any = true;
    if (!outstanding_any && notif.empty() && g.quiescent()) {
      result.quiescent = true;
      break;
    }
  }

  for (auto& [t, w] : ws) {
    DirectiveMsg m;
    m.kind = DirectiveMsg::Kind::Stop;
    w->mb.push(std::move(m));
  }
  for (auto& [t, w] : ws) {
    w->th.join();
    g.st().metrics.pure_steps += w->pure_steps;
  }

  if (result.quiescent) result.outcome = g.outcome();
  result.metrics = g.st().metrics;
  result.events = g.log().events();
  return result;
}

}  // namespace tcml::rt
