#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "tcml/errors.hpp"
#include "tcml/symbol.hpp"
#include "tcml/types.hpp"

namespace tcml {

struct Value;
struct Expr;
struct Process;
using ValuePtr = std::shared_ptr<const Value>;
using ExprPtr = std::shared_ptr<const Expr>;
using ProcPtr = std::shared_ptr<const Process>;

// Channels are runtime objects named by integers from a per-run counter.
// Ids at or above kCanonBase are reserved for canonical renaming inside the
// reference semantics; allocators must stay below it.
struct ChannelId {
  std::int64_t v = -1;
  bool valid() const { return v >= 0; }
  friend auto operator<=>(const ChannelId&, const ChannelId&) = default;
};

inline constexpr std::int64_t kCanonBase = std::int64_t(1) << 40;

// A live transaction instance. `src` is the binder name it was created from
// and only matters for display; identity is the instance number.
struct TxnId {
  std::int64_t inst = -1;
  Symbol src;
  bool valid() const { return inst >= 0; }
  std::string show() const;
  friend bool operator==(const TxnId& a, const TxnId& b) { return a.inst == b.inst; }
  friend bool operator!=(const TxnId& a, const TxnId& b) { return a.inst != b.inst; }
  friend bool operator<(const TxnId& a, const TxnId& b) { return a.inst < b.inst; }
};

// A transaction name as it appears in an expression. Parsed programs carry
// unresolved binder names; entering a transaction substitutes the bound name
// with a fresh instance, after which the reference is resolved.
struct TxnRef {
  Symbol name;
  std::int64_t inst = -1;
  bool resolved() const { return inst >= 0; }
  TxnId id() const { return TxnId{inst, name}; }
  std::string show() const;
};

enum class PrimOp : std::uint8_t { Fst, Snd, Add, Sub, Mul, Leq };

const char* prim_op_name(PrimOp op);

struct Value {
  enum class Kind : std::uint8_t { Var, Unit, Bool, Int, Pair, Fun, Chan };

  Kind kind;
  Symbol var;                       // Var
  bool b = false;                   // Bool
  std::int64_t n = 0;               // Int
  ValuePtr fst, snd;                // Pair
  Symbol self, param;               // Fun
  TypePtr param_type;               // Fun: annotation (unit for thunks)
  TypePtr ret_type;                 // Fun: optional, required for recursion
  ExprPtr body;                     // Fun
  ChannelId chan;                   // Chan

  explicit Value(Kind k) : kind(k) {}
};

struct Expr {
  enum class Kind : std::uint8_t {
    Val,      // embedded value
    Pair,     // (a, b) with at least one non-value side
    App,      // a b
    Op,       // op a
    Let,      // let let_name = a in b
    If,       // if a then b else c
    Send,     // send a b
    Recv,     // recv a
    NewChan,  // newchan[chan_type]
    Spawn,    // spawn a
    Atomic,   // atomic txn_binder { a } else { b }
    Commit,   // commit txn
    Flip      // flip (): coin toss, the one impure builtin
  };

  Kind kind;
  ValuePtr val;
  ExprPtr a, b, c;
  PrimOp op = PrimOp::Fst;
  Symbol let_name;
  Symbol txn_binder;
  TxnRef txn;
  TypePtr chan_type;
  SourcePos pos;

  explicit Expr(Kind k) : kind(k) {}
};

struct Process {
  enum class Kind : std::uint8_t { ExprP, Par, Nu, Trans, Co };

  Kind kind;
  ExprPtr expr;    // ExprP
  ProcPtr p1, p2;  // Par both; Trans default/alternative
  ChannelId chan;  // Nu
  TxnId txn;       // Trans, Co

  explicit Process(Kind k) : kind(k) {}
};

// Value constructors.
ValuePtr v_var(Symbol x);
ValuePtr v_unit();
ValuePtr v_bool(bool b);
ValuePtr v_int(std::int64_t n);
ValuePtr v_pair(ValuePtr a, ValuePtr b);
ValuePtr v_fun(Symbol self, Symbol param, TypePtr param_type, TypePtr ret_type,
               ExprPtr body);
ValuePtr v_chan(ChannelId c);

// Expression constructors.
ExprPtr e_val(ValuePtr v);
ExprPtr e_var(Symbol x);
ExprPtr e_unit();
ExprPtr e_bool(bool b);
ExprPtr e_int(std::int64_t n);
ExprPtr e_pair(ExprPtr a, ExprPtr b);  // collapses to a value pair when possible
ExprPtr e_app(ExprPtr f, ExprPtr arg);
ExprPtr e_op(PrimOp op, ExprPtr operand);
ExprPtr e_let(Symbol x, ExprPtr bound, ExprPtr body);
ExprPtr e_seq(ExprPtr first, ExprPtr rest);  // sugar: let _ = first in rest
ExprPtr e_if(ExprPtr cond, ExprPtr then_e, ExprPtr else_e);
ExprPtr e_send(ExprPtr chan, ExprPtr payload);
ExprPtr e_recv(ExprPtr chan);
ExprPtr e_newchan(TypePtr payload);
ExprPtr e_spawn(ExprPtr thunk);
ExprPtr e_atomic(Symbol binder, ExprPtr deflt, ExprPtr alt);
ExprPtr e_commit(TxnRef k);
ExprPtr e_flip();

// Process constructors.
ProcPtr p_expr(ExprPtr e);
ProcPtr p_par(ProcPtr l, ProcPtr r);
ProcPtr p_nu(ChannelId c, ProcPtr p);
ProcPtr p_trans(TxnId k, ProcPtr deflt, ProcPtr alt);
ProcPtr p_co(TxnId k);

}  // namespace tcml
