#include "tcml/typecheck.hpp"

#include <optional>
#include <string>

#include "tcml/ast_ops.hpp"
#include "tcml/errors.hpp"

namespace tcml {
namespace {

[[noreturn]] void fail(SourcePos pos, const std::string& msg) {
  throw TypeError(pos, msg);
}

std::string shown(const TypePtr& t) { return t ? t->show() : "?"; }

struct Checker {
  TypeEnv env;  // mutated with save/restore discipline

  TypePtr value(const ValuePtr& v, SourcePos pos) {
    switch (v->kind) {
      case Value::Kind::Var: {
        auto it = env.vars.find(v->var);
        if (it == env.vars.end())
          fail(pos, "unbound variable " + v->var.str());
        return it->second;
      }
      case Value::Kind::Unit:
        return Type::unit();
      case Value::Kind::Bool:
        return Type::boolean();
      case Value::Kind::Int:
        return Type::integer();
      case Value::Kind::Pair:
        return Type::prod(value(v->fst, pos), value(v->snd, pos));
      case Value::Kind::Fun:
        return fun(v, pos);
      case Value::Kind::Chan: {
        auto it = env.chans.find(v->chan);
        if (it == env.chans.end())
          fail(pos, "channel literal without a known payload type");
        return Type::chan(it->second);
      }
    }
    fail(pos, "malformed value");
  }

  TypePtr fun(const ValuePtr& v, SourcePos pos) {
    if (!v->param_type)
      fail(pos, "function parameter " + v->param.str() + " lacks a type annotation");
    if (!v->ret_type) {
      // Without a result annotation the function name may not occur in the
      // body; recursion needs the annotation to close the typing loop.
      if (free_vars(v->body).count(v->self))
        fail(pos, "recursive function " + v->self.str() +
                      " needs a result annotation");
      auto saved_self = take(v->self);
      auto saved_param = put(v->param, v->param_type);
      TypePtr body_t = expr(v->body);
      restore(v->param, saved_param);
      restore(v->self, saved_self);
      return Type::arrow(v->param_type, body_t);
    }
    TypePtr self_t = Type::arrow(v->param_type, v->ret_type);
    auto saved_self = put(v->self, self_t);
    auto saved_param = put(v->param, v->param_type);
    TypePtr body_t = expr(v->body);
    restore(v->param, saved_param);
    restore(v->self, saved_self);
    if (!type_equal(body_t, v->ret_type))
      fail(pos, "body of " + v->self.str() + " has type " + shown(body_t) +
                    ", annotation says " + shown(v->ret_type));
    return self_t;
  }

  TypePtr expr(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Val:
        return value(e->val, e->pos);
      case Expr::Kind::Pair:
        return Type::prod(expr(e->a), expr(e->b));
      case Expr::Kind::App: {
        TypePtr f = expr(e->a);
        TypePtr a = expr(e->b);
        if (f->kind != Type::Kind::Arrow)
          fail(e->pos, "application of a non-function of type " + shown(f));
        if (!type_equal(f->a, a))
          fail(e->pos, "argument has type " + shown(a) + ", function expects " +
                           shown(f->a));
        return f->b;
      }
      case Expr::Kind::Op: {
        TypePtr t = expr(e->a);
        switch (e->op) {
          case PrimOp::Fst:
          case PrimOp::Snd:
            if (t->kind != Type::Kind::Prod)
              fail(e->pos, std::string(prim_op_name(e->op)) +
                               " expects a pair, found " + shown(t));
            return e->op == PrimOp::Fst ? t->a : t->b;
          default: {
            bool ints = t->kind == Type::Kind::Prod &&
                        t->a->kind == Type::Kind::Int &&
                        t->b->kind == Type::Kind::Int;
            if (!ints)
              fail(e->pos, std::string(prim_op_name(e->op)) +
                               " expects a pair of ints, found " + shown(t));
            return e->op == PrimOp::Leq ? Type::boolean() : Type::integer();
          }
        }
      }
      case Expr::Kind::Let: {
        TypePtr bound = expr(e->a);
        auto saved = put(e->let_name, bound);
        TypePtr body = expr(e->b);
        restore(e->let_name, saved);
        return body;
      }
      case Expr::Kind::If: {
        TypePtr c = expr(e->a);
        if (c->kind != Type::Kind::Bool)
          fail(e->pos, "condition has type " + shown(c) + ", expected bool");
        TypePtr t = expr(e->b), f = expr(e->c);
        if (!type_equal(t, f))
          fail(e->pos, "branches disagree: " + shown(t) + " vs " + shown(f));
        return t;
      }
      case Expr::Kind::Send: {
        TypePtr c = expr(e->a);
        if (c->kind != Type::Kind::Chan)
          fail(e->pos, "send target has type " + shown(c) + ", expected a channel");
        TypePtr p = expr(e->b);
        if (!type_equal(c->a, p))
          fail(e->pos, "payload has type " + shown(p) + ", channel carries " +
                           shown(c->a));
        return Type::unit();
      }
      case Expr::Kind::Recv: {
        TypePtr c = expr(e->a);
        if (c->kind != Type::Kind::Chan)
          fail(e->pos, "recv source has type " + shown(c) + ", expected a channel");
        return c->a;
      }
      case Expr::Kind::NewChan:
        return Type::chan(e->chan_type);
      case Expr::Kind::Spawn: {
        TypePtr t = expr(e->a);
        if (t->kind != Type::Kind::Arrow || t->a->kind != Type::Kind::Unit)
          fail(e->pos, "spawn expects a unit -> _ thunk, found " + shown(t));
        return Type::unit();
      }
      case Expr::Kind::Atomic: {
        bool added = env.txns.insert(e->txn_binder).second;
        TypePtr d = expr(e->a);
        if (added) env.txns.erase(e->txn_binder);
        TypePtr a = expr(e->b);
        if (!type_equal(d, a))
          fail(e->pos, "atomic branches disagree: " + shown(d) + " vs " + shown(a));
        return d;
      }
      case Expr::Kind::Commit:
        // Resolved references name a live instance and are runtime-internal.
        if (!e->txn.resolved() && !env.txns.count(e->txn.name))
          fail(e->pos, "transaction name " + e->txn.name.str() +
                           " is not in scope");
        return Type::unit();
      case Expr::Kind::Flip:
        return Type::boolean();
    }
    fail(e->pos, "malformed expression");
  }

  std::optional<TypePtr> put(Symbol x, TypePtr t) {
    auto it = env.vars.find(x);
    std::optional<TypePtr> old;
    if (it != env.vars.end()) old = it->second;
    env.vars[x] = std::move(t);
    return old;
  }
  std::optional<TypePtr> take(Symbol x) {
    auto it = env.vars.find(x);
    if (it == env.vars.end()) return std::nullopt;
    std::optional<TypePtr> old = it->second;
    env.vars.erase(it);
    return old;
  }
  void restore(Symbol x, const std::optional<TypePtr>& old) {
    if (old)
      env.vars[x] = *old;
    else
      env.vars.erase(x);
  }
};

}  // namespace

TypePtr typecheck(const ExprPtr& e, const TypeEnv& env) {
  Checker c{env};
  return c.expr(e);
}

TypePtr typecheck_value(const ValuePtr& v, const TypeEnv& env) {
  Checker c{env};
  return c.value(v, SourcePos{});
}

}  // namespace tcml
