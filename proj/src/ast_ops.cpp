#include "tcml/ast_ops.hpp"

#include <cassert>
#include <sstream>

namespace tcml {

std::optional<ValuePtr> as_value(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Val:
      return e->val;
    case Expr::Kind::Pair: {
      auto l = as_value(e->a);
      if (!l) return std::nullopt;
      auto r = as_value(e->b);
      if (!r) return std::nullopt;
      return v_pair(*l, *r);
    }
    default:
      return std::nullopt;
  }
}

Decomposition decompose(const ExprPtr& e) {
  Decomposition d;
  if (auto v = as_value(e)) {
    d.value = *v;
    return d;
  }
  ExprPtr cur = e;
  for (;;) {
    // cur is never a value here; we only descend into non-value children.
    switch (cur->kind) {
      case Expr::Kind::Val:
        throw StuckError("decompose: bare value in non-value position");
      case Expr::Kind::Pair: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::PairL, cur->b, nullptr, nullptr, PrimOp::Fst, Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        // The left side is a value, so the right cannot be (constructors fold
        // all-value pairs into values).
        Frame f{Frame::Kind::PairR, nullptr, nullptr, *as_value(cur->a), PrimOp::Fst,
                Symbol()};
        d.ctx.frames.push_back(f);
        cur = cur->b;
        continue;
      }
      case Expr::Kind::App: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::AppL, cur->b, nullptr, nullptr, PrimOp::Fst, Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        if (!as_value(cur->b)) {
          Frame f{Frame::Kind::AppR, nullptr, nullptr, *as_value(cur->a), PrimOp::Fst,
                  Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->b;
          continue;
        }
        d.redex = cur;
        d.redex_kind = RedexKind::Beta;
        return d;
      }
      case Expr::Kind::Op: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::OpF, nullptr, nullptr, nullptr, cur->op, Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        d.redex = cur;
        d.redex_kind = RedexKind::Delta;
        return d;
      }
      case Expr::Kind::Let: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::LetF, cur->b, nullptr, nullptr, PrimOp::Fst,
                  cur->let_name};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        d.redex = cur;
        d.redex_kind = RedexKind::LetR;
        return d;
      }
      case Expr::Kind::If: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::IfF, cur->b, cur->c, nullptr, PrimOp::Fst, Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        d.redex = cur;
        d.redex_kind = RedexKind::IfR;
        return d;
      }
      case Expr::Kind::Send: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::SendL, cur->b, nullptr, nullptr, PrimOp::Fst, Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        if (!as_value(cur->b)) {
          Frame f{Frame::Kind::SendR, nullptr, nullptr, *as_value(cur->a), PrimOp::Fst,
                  Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->b;
          continue;
        }
        d.redex = cur;
        d.redex_kind = RedexKind::SendR;
        return d;
      }
      case Expr::Kind::Recv: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::RecvF, nullptr, nullptr, nullptr, PrimOp::Fst, Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        d.redex = cur;
        d.redex_kind = RedexKind::RecvR;
        return d;
      }
      case Expr::Kind::NewChan:
        d.redex = cur;
        d.redex_kind = RedexKind::NewChanR;
        return d;
      case Expr::Kind::Spawn: {
        if (!as_value(cur->a)) {
          Frame f{Frame::Kind::SpawnF, nullptr, nullptr, nullptr, PrimOp::Fst, Symbol()};
          d.ctx.frames.push_back(f);
          cur = cur->a;
          continue;
        }
        d.redex = cur;
        d.redex_kind = RedexKind::SpawnR;
        return d;
      }
      case Expr::Kind::Atomic:
        d.redex = cur;
        d.redex_kind = RedexKind::AtomicR;
        return d;
      case Expr::Kind::Commit:
        d.redex = cur;
        d.redex_kind = RedexKind::CommitR;
        return d;
      case Expr::Kind::Flip:
        d.redex = cur;
        d.redex_kind = RedexKind::FlipR;
        return d;
    }
  }
}

ExprPtr rebuild_frame(const Frame& f, ExprPtr inner) {
  switch (f.kind) {
    case Frame::Kind::PairL: return e_pair(std::move(inner), f.e1);
    case Frame::Kind::PairR: return e_pair(e_val(f.v), std::move(inner));
    case Frame::Kind::AppL:  return e_app(std::move(inner), f.e1);
    case Frame::Kind::AppR:  return e_app(e_val(f.v), std::move(inner));
    case Frame::Kind::OpF:   return e_op(f.op, std::move(inner));
    case Frame::Kind::LetF:  return e_let(f.name, std::move(inner), f.e1);
    case Frame::Kind::IfF:   return e_if(std::move(inner), f.e1, f.e2);
    case Frame::Kind::SendL: return e_send(std::move(inner), f.e1);
    case Frame::Kind::SendR: return e_send(e_val(f.v), std::move(inner));
    case Frame::Kind::RecvF: return e_recv(std::move(inner));
    case Frame::Kind::SpawnF: return e_spawn(std::move(inner));
  }
  throw Error("rebuild_frame: bad frame");
}

ExprPtr plug(const EvalContext& ctx, ExprPtr e) {
  for (auto it = ctx.frames.rbegin(); it != ctx.frames.rend(); ++it)
    e = rebuild_frame(*it, std::move(e));
  return e;
}

ValuePtr substitute_value(const ValuePtr& val, Symbol x, const ValuePtr& v) {
  switch (val->kind) {
    case Value::Kind::Var:
      return val->var == x ? v : val;
    case Value::Kind::Pair: {
      ValuePtr l = substitute_value(val->fst, x, v);
      ValuePtr r = substitute_value(val->snd, x, v);
      if (l == val->fst && r == val->snd) return val;
      return v_pair(std::move(l), std::move(r));
    }
    case Value::Kind::Fun: {
      if (val->self == x || val->param == x) return val;  // shadowed
      ExprPtr b = substitute(val->body, x, v);
      if (b == val->body) return val;
      return v_fun(val->self, val->param, val->param_type, val->ret_type,
                   std::move(b));
    }
    default:
      return val;
  }
}

ExprPtr substitute(const ExprPtr& e, Symbol x, const ValuePtr& v) {
  switch (e->kind) {
    case Expr::Kind::Val: {
      ValuePtr nv = substitute_value(e->val, x, v);
      return nv == e->val ? e : e_val(std::move(nv));
    }
    case Expr::Kind::Pair: {
      ExprPtr a = substitute(e->a, x, v), b = substitute(e->b, x, v);
      if (a == e->a && b == e->b) return e;
      return e_pair(std::move(a), std::move(b));
    }
    case Expr::Kind::App: {
      ExprPtr a = substitute(e->a, x, v), b = substitute(e->b, x, v);
      if (a == e->a && b == e->b) return e;
      return e_app(std::move(a), std::move(b));
    }
    case Expr::Kind::Op: {
      ExprPtr a = substitute(e->a, x, v);
      return a == e->a ? e : e_op(e->op, std::move(a));
    }
    case Expr::Kind::Let: {
      ExprPtr a = substitute(e->a, x, v);
      ExprPtr b = e->let_name == x ? e->b : substitute(e->b, x, v);
      if (a == e->a && b == e->b) return e;
      return e_let(e->let_name, std::move(a), std::move(b));
    }
    case Expr::Kind::If: {
      ExprPtr a = substitute(e->a, x, v), b = substitute(e->b, x, v),
              c = substitute(e->c, x, v);
      if (a == e->a && b == e->b && c == e->c) return e;
      return e_if(std::move(a), std::move(b), std::move(c));
    }
    case Expr::Kind::Send: {
      ExprPtr a = substitute(e->a, x, v), b = substitute(e->b, x, v);
      if (a == e->a && b == e->b) return e;
      return e_send(std::move(a), std::move(b));
    }
    case Expr::Kind::Recv: {
      ExprPtr a = substitute(e->a, x, v);
      return a == e->a ? e : e_recv(std::move(a));
    }
    case Expr::Kind::NewChan:
    case Expr::Kind::Commit:
    case Expr::Kind::Flip:
      return e;
    case Expr::Kind::Spawn: {
      ExprPtr a = substitute(e->a, x, v);
      return a == e->a ? e : e_spawn(std::move(a));
    }
    case Expr::Kind::Atomic: {
      ExprPtr a = substitute(e->a, x, v), b = substitute(e->b, x, v);
      if (a == e->a && b == e->b) return e;
      return e_atomic(e->txn_binder, std::move(a), std::move(b));
    }
  }
  throw Error("substitute: bad expr");
}

namespace {
ValuePtr subst_txn_value(const ValuePtr& val, Symbol binder, TxnId inst);

ExprPtr subst_txn_expr(const ExprPtr& e, Symbol binder, TxnId inst) {
  switch (e->kind) {
    case Expr::Kind::Val: {
      ValuePtr nv = subst_txn_value(e->val, binder, inst);
      return nv == e->val ? e : e_val(std::move(nv));
    }
    case Expr::Kind::Pair:
      return e_pair(subst_txn_expr(e->a, binder, inst),
                    subst_txn_expr(e->b, binder, inst));
    case Expr::Kind::App:
      return e_app(subst_txn_expr(e->a, binder, inst),
                   subst_txn_expr(e->b, binder, inst));
    case Expr::Kind::Op:
      return e_op(e->op, subst_txn_expr(e->a, binder, inst));
    case Expr::Kind::Let:
      return e_let(e->let_name, subst_txn_expr(e->a, binder, inst),
                   subst_txn_expr(e->b, binder, inst));
    case Expr::Kind::If:
      return e_if(subst_txn_expr(e->a, binder, inst),
                  subst_txn_expr(e->b, binder, inst),
                  subst_txn_expr(e->c, binder, inst));
    case Expr::Kind::Send:
      return e_send(subst_txn_expr(e->a, binder, inst),
                    subst_txn_expr(e->b, binder, inst));
    case Expr::Kind::Recv:
      return e_recv(subst_txn_expr(e->a, binder, inst));
    case Expr::Kind::NewChan:
    case Expr::Kind::Flip:
      return e;
    case Expr::Kind::Spawn:
      return e_spawn(subst_txn_expr(e->a, binder, inst));
    case Expr::Kind::Atomic: {
      // The binder scopes the default only; the alternative sees the outer name.
      ExprPtr deflt = e->txn_binder == binder
                          ? e->a
                          : subst_txn_expr(e->a, binder, inst);
      ExprPtr alt = subst_txn_expr(e->b, binder, inst);
      if (deflt == e->a && alt == e->b) return e;
      return e_atomic(e->txn_binder, std::move(deflt), std::move(alt));
    }
    case Expr::Kind::Commit: {
      if (!e->txn.resolved() && e->txn.name == binder) {
        TxnRef r;
        r.name = binder;
        r.inst = inst.inst;
        return e_commit(r);
      }
      return e;
    }
  }
  throw Error("substitute_txn: bad expr");
}

ValuePtr subst_txn_value(const ValuePtr& val, Symbol binder, TxnId inst) {
  switch (val->kind) {
    case Value::Kind::Pair: {
      ValuePtr l = subst_txn_value(val->fst, binder, inst);
      ValuePtr r = subst_txn_value(val->snd, binder, inst);
      if (l == val->fst && r == val->snd) return val;
      return v_pair(std::move(l), std::move(r));
    }
    case Value::Kind::Fun: {
      ExprPtr b = subst_txn_expr(val->body, binder, inst);
      if (b == val->body) return val;
      return v_fun(val->self, val->param, val->param_type, val->ret_type,
                   std::move(b));
    }
    default:
      return val;
  }
}
}  // namespace

ExprPtr substitute_txn(const ExprPtr& e, Symbol binder, TxnId inst) {
  return subst_txn_expr(e, binder, inst);
}

ValuePtr delta(PrimOp op, const ValuePtr& v) {
  auto ints = [&]() -> std::pair<std::int64_t, std::int64_t> {
    if (v->kind != Value::Kind::Pair || v->fst->kind != Value::Kind::Int ||
        v->snd->kind != Value::Kind::Int)
      throw DeltaUndefinedError(std::string("delta: ") + prim_op_name(op) +
                                " expects a pair of ints");
    return {v->fst->n, v->snd->n};
  };
  switch (op) {
    case PrimOp::Fst:
      if (v->kind != Value::Kind::Pair)
        throw DeltaUndefinedError("delta: fst expects a pair");
      return v->fst;
    case PrimOp::Snd:
      if (v->kind != Value::Kind::Pair)
        throw DeltaUndefinedError("delta: snd expects a pair");
      return v->snd;
    case PrimOp::Add: {
      auto [a, b] = ints();
      return v_int(static_cast<std::int64_t>(static_cast<std::uint64_t>(a) +
                                             static_cast<std::uint64_t>(b)));
    }
    case PrimOp::Sub: {
      auto [a, b] = ints();
      return v_int(static_cast<std::int64_t>(static_cast<std::uint64_t>(a) -
                                             static_cast<std::uint64_t>(b)));
    }
    case PrimOp::Mul: {
      auto [a, b] = ints();
      return v_int(static_cast<std::int64_t>(static_cast<std::uint64_t>(a) *
                                             static_cast<std::uint64_t>(b)));
    }
    case PrimOp::Leq: {
      auto [a, b] = ints();
      return v_bool(a <= b);
    }
  }
  throw DeltaUndefinedError("delta: bad op");
}

ExprPtr step_pure_redex(const ExprPtr& redex, RedexKind kind) {
  switch (kind) {
    case RedexKind::Beta: {
      ValuePtr fn = *as_value(redex->a);
      ValuePtr arg = *as_value(redex->b);
      if (fn->kind != Value::Kind::Fun)
        throw StuckError("application of a non-function");
      ExprPtr body = substitute(fn->body, fn->self, fn);
      return substitute(body, fn->param, arg);
    }
    case RedexKind::Delta:
      return e_val(delta(redex->op, *as_value(redex->a)));
    case RedexKind::LetR:
      return substitute(redex->b, redex->let_name, *as_value(redex->a));
    case RedexKind::IfR: {
      ValuePtr c = *as_value(redex->a);
      if (c->kind != Value::Kind::Bool)
        throw StuckError("if on a non-boolean");
      return c->b ? redex->b : redex->c;
    }
    default:
      throw StuckError("step_pure_redex: not a pure redex");
  }
}

namespace {
void fv_value(const ValuePtr& v, std::set<Symbol>& bound, std::set<Symbol>& out);

void fv_expr(const ExprPtr& e, std::set<Symbol>& bound, std::set<Symbol>& out) {
  switch (e->kind) {
    case Expr::Kind::Val:
      fv_value(e->val, bound, out);
      return;
    case Expr::Kind::Pair:
    case Expr::Kind::App:
    case Expr::Kind::Send:
      fv_expr(e->a, bound, out);
      fv_expr(e->b, bound, out);
      return;
    case Expr::Kind::Op:
    case Expr::Kind::Recv:
    case Expr::Kind::Spawn:
      fv_expr(e->a, bound, out);
      return;
    case Expr::Kind::Let: {
      fv_expr(e->a, bound, out);
      bool added = bound.insert(e->let_name).second;
      fv_expr(e->b, bound, out);
      if (added) bound.erase(e->let_name);
      return;
    }
    case Expr::Kind::If:
      fv_expr(e->a, bound, out);
      fv_expr(e->b, bound, out);
      fv_expr(e->c, bound, out);
      return;
    case Expr::Kind::Atomic:
      fv_expr(e->a, bound, out);
      fv_expr(e->b, bound, out);
      return;
    case Expr::Kind::NewChan:
    case Expr::Kind::Commit:
    case Expr::Kind::Flip:
      return;
  }
}

void fv_value(const ValuePtr& v, std::set<Symbol>& bound, std::set<Symbol>& out) {
  switch (v->kind) {
    case Value::Kind::Var:
      if (!bound.count(v->var)) out.insert(v->var);
      return;
    case Value::Kind::Pair:
      fv_value(v->fst, bound, out);
      fv_value(v->snd, bound, out);
      return;
    case Value::Kind::Fun: {
      bool a1 = bound.insert(v->self).second;
      bool a2 = bound.insert(v->param).second;
      fv_expr(v->body, bound, out);
      if (a2) bound.erase(v->param);
      if (a1) bound.erase(v->self);
      return;
    }
    default:
      return;
  }
}
}  // namespace

std::set<Symbol> free_vars(const ExprPtr& e) {
  std::set<Symbol> bound, out;
  fv_expr(e, bound, out);
  return out;
}

bool is_closed(const ExprPtr& e) { return free_vars(e).empty(); }

namespace {
void fc_value(const ValuePtr& v, std::set<ChannelId>& out) {
  switch (v->kind) {
    case Value::Kind::Chan: out.insert(v->chan); return;
    case Value::Kind::Pair:
      fc_value(v->fst, out);
      fc_value(v->snd, out);
      return;
    case Value::Kind::Fun: {
      std::set<ChannelId> inner = free_channels_expr(v->body);
      out.insert(inner.begin(), inner.end());
      return;
    }
    default:
      return;
  }
}

void fc_expr(const ExprPtr& e, std::set<ChannelId>& out) {
  if (e->val) fc_value(e->val, out);
  if (e->a) fc_expr(e->a, out);
  if (e->b) fc_expr(e->b, out);
  if (e->c) fc_expr(e->c, out);
}
}  // namespace

std::set<ChannelId> free_channels_expr(const ExprPtr& e) {
  std::set<ChannelId> out;
  fc_expr(e, out);
  return out;
}

std::set<ChannelId> free_channels(const ProcPtr& p) {
  switch (p->kind) {
    case Process::Kind::ExprP:
      return free_channels_expr(p->expr);
    case Process::Kind::Par: {
      std::set<ChannelId> out = free_channels(p->p1);
      std::set<ChannelId> r = free_channels(p->p2);
      out.insert(r.begin(), r.end());
      return out;
    }
    case Process::Kind::Nu: {
      std::set<ChannelId> out = free_channels(p->p1);
      out.erase(p->chan);
      return out;
    }
    case Process::Kind::Trans: {
      std::set<ChannelId> out = free_channels(p->p1);
      std::set<ChannelId> r = free_channels(p->p2);
      out.insert(r.begin(), r.end());
      return out;
    }
    case Process::Kind::Co:
      return {};
  }
  return {};
}

namespace {
void ftn_value(const ValuePtr& v, std::set<Symbol>& bound_names, FreeTxns& out);

void ftn_expr(const ExprPtr& e, std::set<Symbol>& bound_names, FreeTxns& out) {
  switch (e->kind) {
    case Expr::Kind::Val:
      ftn_value(e->val, bound_names, out);
      return;
    case Expr::Kind::Commit:
      if (e->txn.resolved())
        out.insts.insert(e->txn.id());
      else if (!bound_names.count(e->txn.name))
        out.names.insert(e->txn.name);
      return;
    case Expr::Kind::Atomic: {
      bool added = bound_names.insert(e->txn_binder).second;
      ftn_expr(e->a, bound_names, out);
      if (added) bound_names.erase(e->txn_binder);
      ftn_expr(e->b, bound_names, out);  // binder does not scope the alternative
      return;
    }
    default:
      if (e->a) ftn_expr(e->a, bound_names, out);
      if (e->b) ftn_expr(e->b, bound_names, out);
      if (e->c) ftn_expr(e->c, bound_names, out);
      if (e->val) ftn_value(e->val, bound_names, out);
      return;
  }
}

void ftn_value(const ValuePtr& v, std::set<Symbol>& bound_names, FreeTxns& out) {
  switch (v->kind) {
    case Value::Kind::Pair:
      ftn_value(v->fst, bound_names, out);
      ftn_value(v->snd, bound_names, out);
      return;
    case Value::Kind::Fun:
      ftn_expr(v->body, bound_names, out);
      return;
    default:
      return;
  }
}

void ftn_proc(const ProcPtr& p, std::set<Symbol>& bound_names,
              std::set<std::int64_t>& bound_insts, FreeTxns& out) {
  switch (p->kind) {
    case Process::Kind::ExprP: {
      FreeTxns inner;
      ftn_expr(p->expr, bound_names, inner);
      out.names.insert(inner.names.begin(), inner.names.end());
      for (const TxnId& t : inner.insts)
        if (!bound_insts.count(t.inst)) out.insts.insert(t);
      return;
    }
    case Process::Kind::Par:
      ftn_proc(p->p1, bound_names, bound_insts, out);
      ftn_proc(p->p2, bound_names, bound_insts, out);
      return;
    case Process::Kind::Nu:
      ftn_proc(p->p1, bound_names, bound_insts, out);
      return;
    case Process::Kind::Trans: {
      bool added = bound_insts.insert(p->txn.inst).second;
      ftn_proc(p->p1, bound_names, bound_insts, out);
      if (added) bound_insts.erase(p->txn.inst);
      ftn_proc(p->p2, bound_names, bound_insts, out);  // alternative sees outer scope
      return;
    }
    case Process::Kind::Co:
      if (!bound_insts.count(p->txn.inst)) out.insts.insert(p->txn);
      return;
  }
}
}  // namespace

FreeTxns free_txn_names_expr(const ExprPtr& e) {
  FreeTxns out;
  std::set<Symbol> bound;
  ftn_expr(e, bound, out);
  return out;
}

FreeTxns free_txn_names(const ProcPtr& p) {
  FreeTxns out;
  std::set<Symbol> names;
  std::set<std::int64_t> insts;
  ftn_proc(p, names, insts, out);
  return out;
}

// ---------------------------------------------------------------------------
// Printing.
//
// Precedence levels, loosest to tightest:
//   0 sequence   a; b
//   1 item       let / if / fun (open-ended to the right)
//   2 compare    a <= b
//   3 additive   a + b, a - b
//   4 multiply   a * b
//   5 prefix and application   send a b, recv a, f x, commit k
//   6 atom
// `open_ok` is false where an open-ended construct would swallow following
// tokens on reparse (sequence heads, else branches); such constructs get
// parenthesized there even though their level would allow them.

namespace {

struct Printer {
  const PrintOptions& opts;
  std::ostringstream out;

  std::string chan_text(ChannelId c) {
    if (opts.chan_name) return opts.chan_name(c);
    return "#c" + std::to_string(c.v);
  }

  std::string txn_text(const TxnRef& r) {
    if (r.resolved() && opts.txn_name) return opts.txn_name(r.id());
    return r.show();
  }

  bool is_open(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Let:
        return true;
      case Expr::Kind::If:
        return is_open(e->c);
      case Expr::Kind::Val:
        return e->val->kind == Value::Kind::Fun;
      default:
        return false;
    }
  }

  int level(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Let:
        return e->let_name == Symbol::intern("_") ? 0 : 1;
      case Expr::Kind::If:
        return 1;
      case Expr::Kind::Val:
        return e->val->kind == Value::Kind::Fun ? 1 : 6;
      case Expr::Kind::Op:
        switch (e->op) {
          case PrimOp::Leq: return op_is_infix(e) ? 2 : 5;
          case PrimOp::Add:
          case PrimOp::Sub: return op_is_infix(e) ? 3 : 5;
          case PrimOp::Mul: return op_is_infix(e) ? 4 : 5;
          default: return 5;  // fst, snd
        }
      case Expr::Kind::App:
      case Expr::Kind::Send:
      case Expr::Kind::Recv:
      case Expr::Kind::Spawn:
      case Expr::Kind::Commit:
      case Expr::Kind::Flip:
        return 5;
      case Expr::Kind::Pair:
      case Expr::Kind::NewChan:
      case Expr::Kind::Atomic:
        return 6;
    }
    return 6;
  }

  // Arithmetic prints infix only over a syntactic pair; other operand shapes
  // arise mid-reduction and print in a marked prefix form.
  bool op_is_infix(const ExprPtr& e) {
    if (e->kind != Expr::Kind::Op) return false;
    if (e->op == PrimOp::Fst || e->op == PrimOp::Snd) return false;
    if (e->a->kind == Expr::Kind::Pair) return true;
    return e->a->kind == Expr::Kind::Val && e->a->val->kind == Value::Kind::Pair;
  }

  void expr(const ExprPtr& e, int lvl, bool open_ok) {
    bool wrap = level(e) < lvl || (!open_ok && is_open(e));
    if (wrap) out << "(";
    raw_expr(e, wrap);
    if (wrap) out << ")";
  }

  void raw_expr(const ExprPtr& e, bool wrapped) {
    bool open_here = true;  // inside parens or at an open-tolerant position
    (void)wrapped;
    switch (e->kind) {
      case Expr::Kind::Val:
        value(e->val, open_here);
        return;
      case Expr::Kind::Pair:
        out << "(";
        expr(e->a, 0, true);
        out << ", ";
        expr(e->b, 0, true);
        out << ")";
        return;
      case Expr::Kind::App:
        expr(e->a, 5, false);
        out << " ";
        expr(e->b, 6, false);
        return;
      case Expr::Kind::Op:
        if (op_is_infix(e)) {
          ExprPtr l, r;
          if (e->a->kind == Expr::Kind::Pair) {
            l = e->a->a;
            r = e->a->b;
          } else {
            l = e_val(e->a->val->fst);
            r = e_val(e->a->val->snd);
          }
          switch (e->op) {
            case PrimOp::Leq:
              expr(l, 3, false); out << " <= "; expr(r, 3, false); return;
            case PrimOp::Add:
              expr(l, 3, false); out << " + "; expr(r, 4, false); return;
            case PrimOp::Sub:
              expr(l, 3, false); out << " - "; expr(r, 4, false); return;
            case PrimOp::Mul:
              expr(l, 4, false); out << " * "; expr(r, 5, false); return;
            default: break;
          }
        }
        if (e->op == PrimOp::Fst || e->op == PrimOp::Snd) {
          out << prim_op_name(e->op) << " ";
          expr(e->a, 6, false);
        } else {
          // Non-source form, printed for canonical states only.
          out << "#" << prim_op_name(e->op) << " ";
          expr(e->a, 6, false);
        }
        return;
      case Expr::Kind::Let:
        if (e->let_name == Symbol::intern("_")) {
          expr(e->a, 1, false);
          out << "; ";
          expr(e->b, 0, true);
        } else {
          out << "let " << e->let_name.str() << " = ";
          expr(e->a, 0, true);
          out << " in ";
          expr(e->b, 0, true);
        }
        return;
      case Expr::Kind::If:
        out << "if ";
        expr(e->a, 0, true);
        out << " then ";
        expr(e->b, 0, true);
        out << " else ";
        expr(e->c, 1, false);
        return;
      case Expr::Kind::Send:
        out << "send ";
        expr(e->a, 6, false);
        out << " ";
        expr(e->b, 6, false);
        return;
      case Expr::Kind::Recv:
        out << "recv ";
        expr(e->a, 6, false);
        return;
      case Expr::Kind::NewChan:
        out << "newchan[" << e->chan_type->show() << "]";
        return;
      case Expr::Kind::Spawn:
        out << "spawn ";
        expr(e->a, 6, false);
        return;
      case Expr::Kind::Atomic:
        out << "atomic " << e->txn_binder.str() << " { ";
        expr(e->a, 0, true);
        out << " } else { ";
        expr(e->b, 0, true);
        out << " }";
        return;
      case Expr::Kind::Commit:
        out << "commit " << txn_text(e->txn);
        return;
      case Expr::Kind::Flip:
        out << "flip ()";
        return;
    }
  }

  void value(const ValuePtr& v, bool open_ok) {
    switch (v->kind) {
      case Value::Kind::Var:
        out << v->var.str();
        return;
      case Value::Kind::Unit:
        out << "()";
        return;
      case Value::Kind::Bool:
        out << (v->b ? "true" : "false");
        return;
      case Value::Kind::Int:
        out << v->n;
        return;
      case Value::Kind::Pair:
        out << "(";
        value(v->fst, true);
        out << ", ";
        value(v->snd, true);
        out << ")";
        return;
      case Value::Kind::Fun: {
        if (!open_ok) out << "(";
        out << "fun " << v->self.str() << "(";
        if (!(v->param_type && v->param_type->kind == Type::Kind::Unit &&
              v->param.str().starts_with("_")))
          out << v->param.str() << ": "
              << (v->param_type ? v->param_type->show() : "?");
        out << ")";
        if (v->ret_type) {
          std::string r = v->ret_type->show();
          if (v->ret_type->kind == Type::Kind::Arrow) r = "(" + r + ")";
          out << ": " << r;
        }
        out << " -> ";
        expr(v->body, 0, true);
        if (!open_ok) out << ")";
        return;
      }
      case Value::Kind::Chan:
        out << chan_text(v->chan);
        return;
    }
  }
};

}  // namespace

std::string print_value(const ValuePtr& v, const PrintOptions& opts) {
  Printer p{opts, {}};
  p.value(v, true);
  return p.out.str();
}

std::string print_expr(const ExprPtr& e, const PrintOptions& opts) {
  Printer p{opts, {}};
  p.expr(e, 0, true);
  return p.out.str();
}

std::string print_process(const ProcPtr& p, const PrintOptions& opts) {
  switch (p->kind) {
    case Process::Kind::ExprP:
      return print_expr(p->expr, opts);
    case Process::Kind::Par:
      return "(" + print_process(p->p1, opts) + " || " +
             print_process(p->p2, opts) + ")";
    case Process::Kind::Nu: {
      std::string c = opts.chan_name ? opts.chan_name(p->chan)
                                     : "#c" + std::to_string(p->chan.v);
      return "nu " + c + ". " + print_process(p->p1, opts);
    }
    case Process::Kind::Trans: {
      std::string k = opts.txn_name ? opts.txn_name(p->txn) : p->txn.show();
      return "[[ " + print_process(p->p1, opts) + " |>" + k + " " +
             print_process(p->p2, opts) + " ]]";
    }
    case Process::Kind::Co: {
      std::string k = opts.txn_name ? opts.txn_name(p->txn) : p->txn.show();
      return "co " + k;
    }
  }
  return "?";
}

bool same_expr(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  return print_expr(a) == print_expr(b);
}

}  // namespace tcml
