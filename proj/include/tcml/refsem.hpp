#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tcml/ast.hpp"

namespace tcml::refsem {

// A process state is a tree of transaction scopes. Each node holds the
// parallel soup at that level: expression threads, commit tokens, and child
// transactions. A child's default side is live; its alternative is a frozen
// snapshot that only becomes live again on abort.
struct TState;
using TStatePtr = std::shared_ptr<const TState>;

struct TState {
  std::vector<ExprPtr> threads;
  std::vector<TxnId> cos;
  struct Child {
    TxnId id;
    TStatePtr dflt;
    TStatePtr alt;
  };
  std::vector<Child> children;
};

TStatePtr make_node(std::vector<ExprPtr> threads, std::vector<TxnId> cos = {},
                    std::vector<TState::Child> children = {});

// A whole-program state. Restrictions are hoisted to one top-level set;
// channels outside it are free and keep their concrete identity. `key` is
// the canonical serialization: states are equal iff keys are equal.
struct State {
  std::vector<ChannelId> restricted;
  TStatePtr root;
  std::int64_t next_chan = 0;
  std::int64_t next_txn = 0;
  std::string key;
};

// Canonical form: unused restrictions dropped, restricted channels and
// transaction instances renamed by first occurrence in a deterministic
// order, node contents sorted, key filled in.
State canonicalize(State s);

State initial_state(const ExprPtr& program);
State initial_state_proc(const ProcPtr& p);

// One labelled small step. Rule labels:
//   eapp eop elet eift eiff eflipt eflipf        thread-local reduction
//   cspawn cnewchan tratomic trcommit            thread-level effects
//   csyncsr csyncrs                              synchronization (sender at the
//                                                lower / higher thread index)
//   tremb trco trabort                           transaction structure
struct Step {
  std::string rule;
  State next;
};

std::vector<Step> enumerate_steps(const State& s);

bool is_terminal(const State& s);

// Observable content of a terminal state: the multiset of finished root
// values (channel identities erased) plus send@/recv@ barbs on free
// channels. Threads blocked on restricted channels contribute nothing.
std::string outcome_of_terminal(const State& s);

struct OutcomeResult {
  std::set<std::string> outcomes;
  bool truncated = false;
  std::size_t states_explored = 0;
};

// Exhaustive breadth-first enumeration of reachable outcomes. Threads are
// normalized through pure reductions between steps, so `fuel` bounds the
// depth in effectful steps. With abort_free, trabort edges are skipped.
OutcomeResult outcomes(const State& s, int fuel, bool abort_free = false,
                       std::size_t max_states = 2000000);

}  // namespace tcml::refsem
