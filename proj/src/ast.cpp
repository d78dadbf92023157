#include "tcml/ast.hpp"

namespace tcml {

std::string TxnId::show() const {
  if (!valid()) return "<txn?>";
  std::string base = src.empty() ? "t" : src.str();
  return base + "." + std::to_string(inst);
}

std::string TxnRef::show() const {
  if (resolved()) return id().show();
  return name.str();
}

const char* prim_op_name(PrimOp op) {
  switch (op) {
    case PrimOp::Fst: return "fst";
    case PrimOp::Snd: return "snd";
    case PrimOp::Add: return "add";
    case PrimOp::Sub: return "sub";
    case PrimOp::Mul: return "mul";
    case PrimOp::Leq: return "leq";
  }
  return "?";
}

namespace {
std::shared_ptr<Value> mk_v(Value::Kind k) { return std::make_shared<Value>(k); }
std::shared_ptr<Expr> mk_e(Expr::Kind k) { return std::make_shared<Expr>(k); }
std::shared_ptr<Process> mk_p(Process::Kind k) { return std::make_shared<Process>(k); }
}  // namespace

ValuePtr v_var(Symbol x) {
  auto v = mk_v(Value::Kind::Var);
  v->var = x;
  return v;
}

ValuePtr v_unit() {
  static ValuePtr u = mk_v(Value::Kind::Unit);
  return u;
}

ValuePtr v_bool(bool b) {
  auto v = mk_v(Value::Kind::Bool);
  v->b = b;
  return v;
}

ValuePtr v_int(std::int64_t n) {
  auto v = mk_v(Value::Kind::Int);
  v->n = n;
  return v;
}

ValuePtr v_pair(ValuePtr a, ValuePtr b) {
  auto v = mk_v(Value::Kind::Pair);
  v->fst = std::move(a);
  v->snd = std::move(b);
  return v;
}

ValuePtr v_fun(Symbol self, Symbol param, TypePtr param_type, TypePtr ret_type,
               ExprPtr body) {
  auto v = mk_v(Value::Kind::Fun);
  v->self = self;
  v->param = param;
  v->param_type = std::move(param_type);
  v->ret_type = std::move(ret_type);
  v->body = std::move(body);
  return v;
}

ValuePtr v_chan(ChannelId c) {
  auto v = mk_v(Value::Kind::Chan);
  v->chan = c;
  return v;
}

ExprPtr e_val(ValuePtr v) {
  auto e = mk_e(Expr::Kind::Val);
  e->val = std::move(v);
  return e;
}

ExprPtr e_var(Symbol x) { return e_val(v_var(x)); }
ExprPtr e_unit() { return e_val(v_unit()); }
ExprPtr e_bool(bool b) { return e_val(v_bool(b)); }
ExprPtr e_int(std::int64_t n) { return e_val(v_int(n)); }

ExprPtr e_pair(ExprPtr a, ExprPtr b) {
  if (a->kind == Expr::Kind::Val && b->kind == Expr::Kind::Val)
    return e_val(v_pair(a->val, b->val));
  auto e = mk_e(Expr::Kind::Pair);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr e_app(ExprPtr f, ExprPtr arg) {
  auto e = mk_e(Expr::Kind::App);
  e->a = std::move(f);
  e->b = std::move(arg);
  return e;
}

ExprPtr e_op(PrimOp op, ExprPtr operand) {
  auto e = mk_e(Expr::Kind::Op);
  e->op = op;
  e->a = std::move(operand);
  return e;
}

ExprPtr e_let(Symbol x, ExprPtr bound, ExprPtr body) {
  auto e = mk_e(Expr::Kind::Let);
  e->let_name = x;
  e->a = std::move(bound);
  e->b = std::move(body);
  return e;
}

ExprPtr e_seq(ExprPtr first, ExprPtr rest) {
  return e_let(Symbol::intern("_"), std::move(first), std::move(rest));
}

ExprPtr e_if(ExprPtr cond, ExprPtr then_e, ExprPtr else_e) {
  auto e = mk_e(Expr::Kind::If);
  e->a = std::move(cond);
  e->b = std::move(then_e);
  e->c = std::move(else_e);
  return e;
}

ExprPtr e_send(ExprPtr chan, ExprPtr payload) {
  auto e = mk_e(Expr::Kind::Send);
  e->a = std::move(chan);
  e->b = std::move(payload);
  return e;
}

ExprPtr e_recv(ExprPtr chan) {
  auto e = mk_e(Expr::Kind::Recv);
  e->a = std::move(chan);
  return e;
}

ExprPtr e_newchan(TypePtr payload) {
  auto e = mk_e(Expr::Kind::NewChan);
  e->chan_type = std::move(payload);
  return e;
}

ExprPtr e_spawn(ExprPtr thunk) {
  auto e = mk_e(Expr::Kind::Spawn);
  e->a = std::move(thunk);
  return e;
}

ExprPtr e_atomic(Symbol binder, ExprPtr deflt, ExprPtr alt) {
  auto e = mk_e(Expr::Kind::Atomic);
  e->txn_binder = binder;
  e->a = std::move(deflt);
  e->b = std::move(alt);
  return e;
}

ExprPtr e_commit(TxnRef k) {
  auto e = mk_e(Expr::Kind::Commit);
  e->txn = k;
  return e;
}

ExprPtr e_flip() { return mk_e(Expr::Kind::Flip); }

ProcPtr p_expr(ExprPtr e) {
  auto p = mk_p(Process::Kind::ExprP);
  p->expr = std::move(e);
  return p;
}

ProcPtr p_par(ProcPtr l, ProcPtr r) {
  auto p = mk_p(Process::Kind::Par);
  p->p1 = std::move(l);
  p->p2 = std::move(r);
  return p;
}

ProcPtr p_nu(ChannelId c, ProcPtr inner) {
  auto p = mk_p(Process::Kind::Nu);
  p->chan = c;
  p->p1 = std::move(inner);
  return p;
}

ProcPtr p_trans(TxnId k, ProcPtr deflt, ProcPtr alt) {
  auto p = mk_p(Process::Kind::Trans);
  p->txn = k;
  p->p1 = std::move(deflt);
  p->p2 = std::move(alt);
  return p;
}

ProcPtr p_co(TxnId k) {
  auto p = mk_p(Process::Kind::Co);
  p->txn = k;
  return p;
}

}  // namespace tcml
