#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcml/ast.hpp"

namespace tcml {

// One layer of evaluation context. Frames are stored outermost first in
// EvalContext; plugging folds from the innermost end.
struct Frame {
  enum class Kind : std::uint8_t {
    PairL,  // ([] , e)
    PairR,  // (v , [])
    AppL,   // [] e
    AppR,   // v []
    OpF,    // op []
    LetF,   // let x = [] in e
    IfF,    // if [] then e1 else e2
    SendL,  // send [] e
    SendR,  // send v []
    RecvF,  // recv []
    SpawnF  // spawn []
  };
  Kind kind;
  ExprPtr e1, e2;
  ValuePtr v;
  PrimOp op = PrimOp::Fst;
  Symbol name;
};

struct EvalContext {
  std::vector<Frame> frames;  // outermost first
  bool empty() const { return frames.empty(); }
};

// What sits at the hole after decomposition.
enum class RedexKind : std::uint8_t {
  Beta,     // (fun f(x) -> e) v
  Delta,    // op v
  LetR,     // let x = v in e
  IfR,      // if v then e1 else e2
  SendR,    // send c v   (communication, blocks without a partner)
  RecvR,    // recv c
  NewChanR,
  SpawnR,
  AtomicR,
  CommitR,
  FlipR
};

struct Decomposition {
  // Exactly one of `value` or `redex` is set.
  std::optional<ValuePtr> value;
  EvalContext ctx;
  ExprPtr redex;
  RedexKind redex_kind = RedexKind::Beta;
};

// Recognizes values, folding pair expressions whose sides are both values.
std::optional<ValuePtr> as_value(const ExprPtr& e);

// Unique decomposition of a closed expression into E[redex] or a value.
// Purely syntactic: shape errors (e.g. applying an int) surface when the
// redex is stepped, not here. Variables count as values, so open terms
// decompose too; their stuckness shows up at step time.
Decomposition decompose(const ExprPtr& e);

// plug(decompose(e).ctx, redex) == e up to pair-value folding.
ExprPtr plug(const EvalContext& ctx, ExprPtr e);
ExprPtr rebuild_frame(const Frame& f, ExprPtr inner);

// Capture-avoiding substitution of a closed value for a variable. Closedness
// of `v` makes freshening unnecessary: substitution stops at shadowing
// binders and nothing can be captured.
ExprPtr substitute(const ExprPtr& e, Symbol x, const ValuePtr& v);
ValuePtr substitute_value(const ValuePtr& val, Symbol x, const ValuePtr& v);

// Resolves the transaction name bound by an atomic to a fresh instance.
ExprPtr substitute_txn(const ExprPtr& e, Symbol binder, TxnId inst);

// Primitive operator semantics. Arithmetic wraps at 64 bits. Throws
// DeltaUndefinedError outside the domain.
ValuePtr delta(PrimOp op, const ValuePtr& v);

// One deterministic reduction of the expression at the redex, for Beta,
// Delta, LetR and IfR only. Throws StuckError on shape mismatch.
ExprPtr step_pure_redex(const ExprPtr& redex, RedexKind kind);

std::set<Symbol> free_vars(const ExprPtr& e);
bool is_closed(const ExprPtr& e);

std::set<ChannelId> free_channels(const ProcPtr& p);
std::set<ChannelId> free_channels_expr(const ExprPtr& e);

struct FreeTxns {
  std::set<TxnId> insts;    // resolved references not bound by a Trans
  std::set<Symbol> names;   // unresolved references not bound by an atomic
  bool empty() const { return insts.empty() && names.empty(); }
};
FreeTxns free_txn_names(const ProcPtr& p);
FreeTxns free_txn_names_expr(const ExprPtr& e);

// Printing. The same printer serves the parser round-trip (default options)
// and canonical serialization in the reference semantics (rename hooks set).
struct PrintOptions {
  // Maps a channel to its display text; default "#c<id>".
  std::function<std::string(ChannelId)> chan_name;
  // Maps a resolved transaction instance to display text; default "k.3" style.
  std::function<std::string(TxnId)> txn_name;
};

std::string print_value(const ValuePtr& v, const PrintOptions& opts = {});
std::string print_expr(const ExprPtr& e, const PrintOptions& opts = {});
std::string print_process(const ProcPtr& p, const PrintOptions& opts = {});

// Structural equality through the printer; adequate because printing is
// injective on ASTs up to pair-value folding.
bool same_expr(const ExprPtr& a, const ExprPtr& b);

}  // namespace tcml
