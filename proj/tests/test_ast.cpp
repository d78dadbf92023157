#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "tcml/ast.hpp"
#include "tcml/ast_ops.hpp"

using namespace tcml;

namespace {

Symbol S(const char* s) { return Symbol::intern(s); }

ExprPtr arith(PrimOp op, ExprPtr l, ExprPtr r) {
  return e_op(op, e_pair(std::move(l), std::move(r)));
}

// Independent enumeration of every (context, redex) split permitted by the
// evaluation context grammar. Used to check that decompose() is the unique
// one.
struct Split {
  EvalContext ctx;
  ExprPtr redex;
};

bool is_redex_shape(const ExprPtr& e) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Val:
    case K::Pair:
      return false;
    case K::App:
    case K::Send:
      return as_value(e->a) && as_value(e->b);
    case K::Op:
    case K::Let:
    case K::If:
    case K::Recv:
    case K::Spawn:
      return static_cast<bool>(as_value(e->a));
    case K::NewChan:
    case K::Atomic:
    case K::Commit:
    case K::Flip:
      return true;
  }
  return false;
}

void all_splits(const ExprPtr& e, std::vector<Split>& out) {
  if (as_value(e)) return;
  if (is_redex_shape(e)) out.push_back({{}, e});

  auto descend = [&](Frame f, const ExprPtr& child) {
    std::vector<Split> subs;
    all_splits(child, subs);
    for (auto& s : subs) {
      EvalContext c;
      c.frames.push_back(f);
      c.frames.insert(c.frames.end(), s.ctx.frames.begin(), s.ctx.frames.end());
      out.push_back({std::move(c), s.redex});
    }
  };

  using K = Expr::Kind;
  using FK = Frame::Kind;
  Symbol none;
  switch (e->kind) {
    case K::Pair:
      descend({FK::PairL, e->b, nullptr, nullptr, PrimOp::Fst, none}, e->a);
      if (auto v = as_value(e->a))
        descend({FK::PairR, nullptr, nullptr, *v, PrimOp::Fst, none}, e->b);
      break;
    case K::App:
      descend({FK::AppL, e->b, nullptr, nullptr, PrimOp::Fst, none}, e->a);
      if (auto v = as_value(e->a))
        descend({FK::AppR, nullptr, nullptr, *v, PrimOp::Fst, none}, e->b);
      break;
    case K::Op:
      descend({FK::OpF, nullptr, nullptr, nullptr, e->op, none}, e->a);
      break;
    case K::Let:
      descend({FK::LetF, e->b, nullptr, nullptr, PrimOp::Fst, e->let_name}, e->a);
      break;
    case K::If:
      descend({FK::IfF, e->b, e->c, nullptr, PrimOp::Fst, none}, e->a);
      break;
    case K::Send:
      descend({FK::SendL, e->b, nullptr, nullptr, PrimOp::Fst, none}, e->a);
      if (auto v = as_value(e->a))
        descend({FK::SendR, nullptr, nullptr, *v, PrimOp::Fst, none}, e->b);
      break;
    case K::Recv:
      descend({FK::RecvF, nullptr, nullptr, nullptr, PrimOp::Fst, none}, e->a);
      break;
    case K::Spawn:
      descend({FK::SpawnF, nullptr, nullptr, nullptr, PrimOp::Fst, none}, e->a);
      break;
    default:
      break;  // NewChan, Atomic, Commit, Flip, Val: no frames inside
  }
}

}  // namespace

TEST_SUITE("ast") {

TEST_CASE("pair constructors fold values") {
  ExprPtr p = e_pair(e_int(1), e_int(2));
  CHECK(p->kind == Expr::Kind::Val);
  auto v = as_value(p);
  REQUIRE(v.has_value());
  CHECK((*v)->kind == Value::Kind::Pair);

  ExprPtr q = e_pair(e_int(1), e_recv(e_var(S("c"))));
  CHECK(q->kind == Expr::Kind::Pair);
  CHECK_FALSE(as_value(q).has_value());
}

TEST_CASE("decompose finds the leftmost innermost redex") {
  // (1 + 2) * 3: the addition reduces first, under a multiply frame.
  ExprPtr e = arith(PrimOp::Mul, arith(PrimOp::Add, e_int(1), e_int(2)), e_int(3));
  Decomposition d = decompose(e);
  REQUIRE_FALSE(d.value.has_value());
  CHECK(d.redex_kind == RedexKind::Delta);
  CHECK(d.redex->op == PrimOp::Add);
  CHECK(d.ctx.frames.size() == 2);
  CHECK(print_expr(plug(d.ctx, d.redex)) == print_expr(e));

  // send (recv c) (): the channel position evaluates before the payload.
  ExprPtr s = e_send(e_recv(e_val(v_chan(ChannelId{1}))), e_unit());
  Decomposition ds = decompose(s);
  CHECK(ds.redex_kind == RedexKind::RecvR);
  CHECK(ds.ctx.frames.size() == 1);
  CHECK(ds.ctx.frames[0].kind == Frame::Kind::SendL);

  // A value decomposes to itself.
  Decomposition dv = decompose(e_pair(e_int(1), e_int(2)));
  REQUIRE(dv.value.has_value());
  CHECK((*dv.value)->kind == Value::Kind::Pair);
}

TEST_CASE("decompose agrees with exhaustive split enumeration") {
  gen::Rng rng(20240817);
  for (int i = 0; i < 500; i++) {
    ExprPtr e = gen::random_closed_expr(rng, 1 + gen::pick(rng, 4));
    std::vector<Split> splits;
    all_splits(e, splits);
    Decomposition d = decompose(e);
    if (as_value(e)) {
      CHECK(splits.empty());
      CHECK(d.value.has_value());
      continue;
    }
    REQUIRE(splits.size() == 1);  // unique decomposition
    REQUIRE_FALSE(d.value.has_value());
    CHECK(print_expr(splits[0].redex) == print_expr(d.redex));
    CHECK(splits[0].ctx.frames.size() == d.ctx.frames.size());
    CHECK(print_expr(plug(d.ctx, d.redex)) == print_expr(e));
  }
}

TEST_CASE("plug after decompose is the identity") {
  gen::Rng rng(7);
  for (int i = 0; i < 1000; i++) {
    ExprPtr e = gen::random_closed_expr(rng, 1 + gen::pick(rng, 5));
    Decomposition d = decompose(e);
    if (d.value) {
      CHECK(print_expr(e_val(*d.value)) == print_expr(e));
    } else {
      CHECK(print_expr(plug(d.ctx, d.redex)) == print_expr(e));
    }
  }
}

TEST_CASE("substitution respects shadowing") {
  Symbol x = S("x");
  // x + (let x = 1 in x)   with x := 5
  ExprPtr e = arith(PrimOp::Add, e_var(x), e_let(x, e_int(1), e_var(x)));
  ExprPtr r = substitute(e, x, v_int(5));
  CHECK(print_expr(r) == "5 + (let x = 1 in x)");

  // A function whose parameter shadows the substituted variable.
  ValuePtr f = v_fun(S("f"), x, Type::integer(), nullptr, e_var(x));
  ExprPtr body = e_app(e_val(f), e_var(x));
  ExprPtr rb = substitute(body, x, v_int(9));
  CHECK(print_expr(rb) == "(fun f(x: int) -> x) 9");

  // Self-name shadowing.
  ValuePtr g = v_fun(S("g"), S("y"), Type::unit(), nullptr, e_var(S("g")));
  CHECK(substitute_value(g, S("g"), v_int(1)) == g);

  // Substituting a closed value never leaves the variable free.
  gen::Rng rng(99);
  for (int i = 0; i < 200; i++) {
    ExprPtr t = gen::random_closed_expr(rng, 3);
    // t is closed, so substituting into it changes nothing.
    CHECK(substitute(t, S("zz"), v_int(3)) == t);
  }
}

TEST_CASE("beta substitutes both the function name and the parameter") {
  // (fun f(x: int) -> if x <= 0 then 0 else f (x - 1)) 2   steps to its body
  Symbol f = S("f"), x = S("x");
  ExprPtr body = e_if(arith(PrimOp::Leq, e_var(x), e_int(0)), e_int(0),
                      e_app(e_var(f), arith(PrimOp::Sub, e_var(x), e_int(1))));
  ValuePtr fn = v_fun(f, x, Type::integer(), Type::integer(), body);
  ExprPtr app = e_app(e_val(fn), e_int(2));
  Decomposition d = decompose(app);
  REQUIRE(d.redex_kind == RedexKind::Beta);
  ExprPtr stepped = step_pure_redex(d.redex, d.redex_kind);
  CHECK(free_vars(stepped).empty());
  CHECK(print_expr(stepped) ==
        "if 2 <= 0 then 0 else (fun f(x: int): int -> if x <= 0 then 0 else f "
        "(x - 1)) (2 - 1)");
}

TEST_CASE("transaction name resolution stops at shadowing binders") {
  Symbol k = S("k");
  TxnRef unresolved;
  unresolved.name = k;
  ExprPtr e = e_seq(e_commit(unresolved),
                    e_atomic(k, e_commit(unresolved), e_commit(unresolved)));
  ExprPtr r = substitute_txn(e, k, TxnId{7, k});
  // Outer commit resolves; the default of the inner atomic is shadowed; the
  // alternative is outside the inner binder's scope and resolves.
  CHECK(print_expr(r) == "commit k.7; atomic k { commit k } else { commit k.7 }");
}

TEST_CASE("delta matches native arithmetic with wrapping") {
  gen::Rng rng(123);
  std::uniform_int_distribution<std::int64_t> full(INT64_MIN, INT64_MAX);
  std::vector<std::int64_t> specials = {0, 1, -1, INT64_MAX, INT64_MIN};
  for (int i = 0; i < 10000; i++) {
    std::int64_t a = i < 25 ? specials[i % 5] : full(rng);
    std::int64_t b = i < 25 ? specials[i / 5] : full(rng);
    ValuePtr p = v_pair(v_int(a), v_int(b));
    auto ua = static_cast<std::uint64_t>(a), ub = static_cast<std::uint64_t>(b);
    CHECK(delta(PrimOp::Add, p)->n == static_cast<std::int64_t>(ua + ub));
    CHECK(delta(PrimOp::Sub, p)->n == static_cast<std::int64_t>(ua - ub));
    CHECK(delta(PrimOp::Mul, p)->n == static_cast<std::int64_t>(ua * ub));
    CHECK(delta(PrimOp::Leq, p)->b == (a <= b));
  }
  ValuePtr pr = v_pair(v_unit(), v_bool(true));
  CHECK(delta(PrimOp::Fst, pr)->kind == Value::Kind::Unit);
  CHECK(delta(PrimOp::Snd, pr)->b == true);
  CHECK_THROWS_AS(delta(PrimOp::Add, v_pair(v_bool(true), v_int(1))),
                  DeltaUndefinedError);
  CHECK_THROWS_AS(delta(PrimOp::Fst, v_int(3)), DeltaUndefinedError);
  CHECK_THROWS_AS(delta(PrimOp::Leq, v_unit()), DeltaUndefinedError);
}

TEST_CASE("free channels respect restriction") {
  ChannelId c1{1}, c2{2};
  ProcPtr p = p_nu(c1, p_par(p_expr(e_send(e_val(v_chan(c1)), e_unit())),
                             p_expr(e_recv(e_val(v_chan(c2))))));
  auto fc = free_channels(p);
  CHECK(fc == std::set<ChannelId>{c2});

  // Channels inside function bodies count.
  ValuePtr f = v_fun(S("f"), S("_"), Type::unit(), nullptr,
                     e_recv(e_val(v_chan(c1))));
  CHECK(free_channels_expr(e_val(f)) == std::set<ChannelId>{c1});
}

TEST_CASE("free transaction names and instances") {
  Symbol k = S("k"), l = S("l");
  TxnId k7{7, k}, l3{3, l};

  // The transaction binder scopes the default branch only.
  ProcPtr tr = p_trans(k7, p_par(p_co(l3), p_co(k7)), p_co(k7));
  FreeTxns ft = free_txn_names(tr);
  CHECK(ft.insts == std::set<TxnId>{l3, k7});  // k7 free via the alternative

  ProcPtr closed = p_trans(k7, p_co(k7), p_expr(e_unit()));
  CHECK(free_txn_names(closed).empty());

  TxnRef rk;
  rk.name = k;
  ExprPtr at = e_atomic(k, e_commit(rk), e_commit(rk));
  FreeTxns fe = free_txn_names_expr(at);
  CHECK(fe.names == std::set<Symbol>{k});  // from the alternative only
  CHECK(free_txn_names_expr(e_atomic(k, e_commit(rk), e_unit())).empty());
}

TEST_CASE("printer golden forms") {
  Symbol f = S("f"), x = S("x");
  CHECK(print_expr(e_seq(e_app(e_var(f), e_unit()), e_int(3))) == "f (); 3");
  CHECK(print_expr(e_seq(e_let(x, e_int(1), e_var(x)), e_int(2))) ==
        "(let x = 1 in x); 2");
  CHECK(print_expr(e_seq(e_if(e_bool(true), e_int(1), e_int(2)), e_int(3))) ==
        "if true then 1 else 2; 3");
  TxnRef rk;
  rk.name = S("k");
  CHECK(print_expr(e_atomic(S("k"), e_seq(e_commit(rk), e_int(3)), e_int(0))) ==
        "atomic k { commit k; 3 } else { 0 }");
  CHECK(print_expr(arith(PrimOp::Add, e_int(1),
                         arith(PrimOp::Mul, e_int(2), e_int(3)))) ==
        "1 + 2 * 3");
  CHECK(print_expr(arith(PrimOp::Mul, arith(PrimOp::Add, e_int(1), e_int(2)),
                         e_int(3))) == "(1 + 2) * 3");
  CHECK(print_expr(arith(PrimOp::Sub, e_int(1),
                         arith(PrimOp::Sub, e_int(2), e_int(3)))) ==
        "1 - (2 - 3)");
  CHECK(print_expr(e_val(v_fun(S("loop"), x, Type::integer(), Type::integer(),
                               e_app(e_var(S("loop")), e_var(x))))) ==
        "fun loop(x: int): int -> loop x");
  CHECK(print_expr(e_val(v_fun(S("t"), S("_"), Type::unit(), nullptr,
                               e_unit()))) == "fun t() -> ()");
  CHECK(print_expr(e_send(e_val(v_chan(ChannelId{7})), e_unit())) ==
        "send #c7 ()");
  CHECK(print_expr(e_newchan(Type::chan(Type::prod(
            Type::integer(), Type::chan(Type::integer()))))) ==
        "newchan[(int * int chan) chan]");

  TxnId k3{3, S("k")};
  ProcPtr pr = p_trans(k3, p_par(p_expr(e_unit()), p_co(k3)), p_expr(e_int(0)));
  CHECK(print_process(pr) == "[[ (() || co k.3) |>k.3 0 ]]");
}

TEST_CASE("same_expr identifies folded pairs and separates distinct terms") {
  CHECK(same_expr(e_pair(e_int(1), e_int(2)),
                  e_val(v_pair(v_int(1), v_int(2)))));
  CHECK_FALSE(same_expr(e_int(1), e_int(2)));
  CHECK_FALSE(same_expr(e_val(v_chan(ChannelId{1})), e_val(v_chan(ChannelId{2}))));
}

}  // TEST_SUITE
