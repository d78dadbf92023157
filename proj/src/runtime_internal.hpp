#pragma once

// Coordination layer shared by the deterministic simulation executor and the
// threaded executor. Workers step expressions and report effects; the
// gatherer owns the transaction trie, consults the scheduling policy and
// applies its directives. Only transport differs between the two executors.

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "tcml/ast_ops.hpp"
#include "tcml/runtime.hpp"
#include "tcml/sched.hpp"
#include "tcml/trace.hpp"
#include "tcml/trie.hpp"

namespace tcml::rt {

struct IdSource {
  std::atomic<std::int64_t> next_thread{0};
  std::atomic<std::int64_t> next_chan{0};
  std::atomic<std::int64_t> next_txn{0};
};

// Worker-side alternative entry; `inner` is the frozen copy of the entries
// that sat inside this one when it was captured.
struct WAlt {
  TxnId txn;
  ExprPtr saved;
  std::vector<WAlt> inner;
};

struct Effect {
  enum class Kind {
    Paused,     // slice budget exhausted, still runnable
    Spawned,    // minted `child`, carries the thunk
    TxnStarted, // entered a transaction, alternative pushed locally
    CoSpawned,  // commit executed, token must be registered
    Blocked,    // parked on a send or recv
    Finished,   // expression is a value
    Stuck       // shape error; cannot happen on typechecked programs
  };
  Kind kind = Kind::Paused;
  ThreadId child = -1;
  ValuePtr thunk;
  TxnId txn;
  ChannelId chan{-1};
  bool is_send = false;
  ValuePtr payload;
  ValuePtr value;
  std::string error;
};

class WorkerCore {
 public:
  WorkerCore(ThreadId id, ExprPtr start, IdSource* ids, std::uint64_t flip_seed)
      : id_(id), expr_(std::move(start)), ids_(ids), flip_rng_(flip_seed) {}

  ThreadId id() const { return id_; }
  const ExprPtr& expr() const { return expr_; }

  // Runs until an effect or until `max_pure_steps` pure reductions happened.
  Effect run(int max_pure_steps, std::int64_t* pure_counter);

  // Safe-point directive application.
  void deliver_recv(const ValuePtr& v);
  void deliver_send();
  void push_alt(const TxnId& k, int pos);
  void drop_alt(const TxnId& k);
  void rollback(const TxnId& k);

  std::vector<TxnId> stack_names() const;  // innermost first

 private:
  ThreadId id_;
  ExprPtr expr_;
  std::vector<WAlt> stack_;
  IdSource* ids_;
  Rng flip_rng_;
  std::optional<Decomposition> parked_;
};

// Trie bookkeeping, tracing and policy consultation. Single-threaded: the
// simulation loop or the dedicated gatherer thread is the only caller.
class Gatherer {
 public:
  Gatherer(const RunConfig& cfg, IdSource* ids);

  RtState& st() { return st_; }
  const RtState& st() const { return st_; }
  TraceLog& log() { return log_; }

  void on_root(ThreadId t);
  void on_spawn(ThreadId parent, ThreadId child);
  void on_txn_start(ThreadId t, const TxnId& k);
  void on_co(ThreadId t, const TxnId& k);
  void on_block(ThreadId t, ChannelId c, bool is_send, ValuePtr payload);
  void on_finish(ThreadId t, ValuePtr v);
  void on_stale(ThreadId t, const char* what);

  std::optional<Directive> poll_policy();

  // Result of applying a directive to the trie; the executor forwards the
  // worker-side part to the affected workers.
  struct Applied {
    bool stale = false;
    Directive d;
    // Sync
    ValuePtr payload;
    // Embed
    std::vector<EmbedPush> pushes;
    TxnId txn;  // the directive's transaction identifier
    // Commit
    std::vector<ThreadId> drops;
    // Abort
    AbortPlan abort_plan;
  };
  Applied apply(const Directive& d);

  // True when nothing can ever step again except via policy aborts: no
  // runnable thread, no same-level complementary pair, no live transaction.
  bool quiescent() const;
  bool runnable(ThreadId t) const;
  std::string outcome() const;

 private:
  void emit(const char* kind, ThreadId thread, const std::string& txn,
            const std::string& path,
            std::vector<std::pair<std::string, std::string>> extra = {});
  bool validate(const Directive& d) const;

  RunConfig cfg_;
  RtState st_;
  TraceLog log_;
  Rng policy_rng_;
};

std::string format_outcome(std::vector<std::string> parts);

RunResult run_sim(const ExprPtr& program, const RunConfig& cfg);
RunResult run_threaded(const ExprPtr& program, const RunConfig& cfg);

}  // namespace tcml::rt
