#include <string>

#include "doctest.h"
#include "gen.hpp"
#include "tcml/ast_ops.hpp"
#include "tcml/errors.hpp"
#include "tcml/parser.hpp"
#include "tcml/typecheck.hpp"

using namespace tcml;

namespace {
std::string type_of(const std::string& src) {
  return typecheck(parse_program(src))->show();
}
}

TEST_SUITE("typecheck") {

TEST_CASE("well typed programs") {
  CHECK(type_of("1 + 2 * 3") == "int");
  CHECK(type_of("1 <= 2") == "bool");
  CHECK(type_of("(1, (true, ()))") == "int * (bool * unit)");
  CHECK(type_of("fst (1, true)") == "int");
  CHECK(type_of("snd (1, true)") == "bool");
  CHECK(type_of("fun loop(x: int): int -> loop x") == "int -> int");
  CHECK(type_of("(fun f(x: int) -> (x, x)) 3") == "int * int");
  CHECK(type_of("let c = newchan[int] in c") == "int chan");
  CHECK(type_of("let c = newchan[int] in send c 5") == "unit");
  CHECK(type_of("let c = newchan[int] in recv c + 1") == "int");
  CHECK(type_of("spawn (fun t() -> 42)") == "unit");
  CHECK(type_of("atomic k { commit k; 1 } else { 2 }") == "int");
  CHECK(type_of("if flip () then 1 else 2") == "int");
  CHECK(type_of("let f = fun g(p: int * int): int -> fst p + snd p in f (3, 4)") ==
        "int");
  // A nested atomic's alternative refers to the outer transaction.
  CHECK(type_of("atomic k { atomic l { commit l } else { commit k } } else { () }") ==
        "unit");
}

TEST_CASE("ill typed programs are rejected with positions") {
  auto reject = [](const std::string& src, const std::string& needle) {
    CAPTURE(src);
    try {
      typecheck(parse_program(src));
      FAIL("expected a type error for: ", src);
    } catch (const TypeError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
      CHECK(e.pos.line >= 1);
    }
  };
  reject("x", "unbound variable x");
  reject("1 2", "non-function");
  reject("(fun f(x: int) -> x) true", "function expects int");
  reject("1 + true", "pair of ints");
  reject("fst 3", "expects a pair");
  reject("if 1 then 2 else 3", "expected bool");
  reject("if true then 2 else ()", "branches disagree");
  reject("send 3 ()", "expected a channel");
  reject("let c = newchan[int] in send c true", "channel carries int");
  reject("recv 3", "expected a channel");
  reject("spawn 3", "thunk");
  reject("spawn (fun f(x: int) -> x)", "thunk");
  reject("atomic k { 1 } else { true }", "branches disagree");
  reject("commit k", "not in scope");
  reject("atomic k { () } else { commit k }", "not in scope");
  reject("fun f(x: int) -> f x", "needs a result annotation");
  reject("fun f(x: int): bool -> x", "annotation says bool");
}

TEST_CASE("position points at the offending node") {
  try {
    typecheck(parse_program("let x = 1 in\nsend x ()"));
    FAIL("expected a type error");
  } catch (const TypeError& e) {
    CHECK(e.pos.line == 2);
    CHECK(e.pos.col == 1);
  }
}

TEST_CASE("preservation and progress across pure steps") {
  gen::Rng rng(20240819);
  int steps_total = 0;
  for (int i = 0; i < 1000; i++) {
    TypePtr want = gen::random_type(rng, 2);
    ExprPtr e = gen::random_typed_expr(rng, want, 5);
    TypePtr t0;
    REQUIRE_NOTHROW(t0 = typecheck(e));
    REQUIRE(type_equal(t0, want));

    ExprPtr cur = e;
    for (int s = 0; s < 50; s++) {
      Decomposition d = decompose(cur);
      if (d.value) break;
      bool pure = d.redex_kind == RedexKind::Beta ||
                  d.redex_kind == RedexKind::Delta ||
                  d.redex_kind == RedexKind::LetR ||
                  d.redex_kind == RedexKind::IfR;
      if (!pure) break;  // communication or transaction effects stop here
      // Progress: a well-typed pure redex always steps.
      ExprPtr next = plug(d.ctx, step_pure_redex(d.redex, d.redex_kind));
      // Preservation: the type never changes.
      CHECK(type_equal(typecheck(next), t0));
      cur = next;
      steps_total++;
    }
  }
  // The generator must actually exercise reduction, not just values.
  CHECK(steps_total > 300);
}

}  // TEST_SUITE
