#include <algorithm>
#include <deque>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "gen.hpp"
#include "tcml/ast.hpp"
#include "tcml/ast_ops.hpp"
#include "tcml/parser.hpp"
#include "tcml/refsem.hpp"

using namespace tcml;
namespace rs = tcml::refsem;

namespace {

Symbol S(const char* s) { return Symbol::intern(s); }

// Parses a source fragment and replaces free variables with channel literals,
// which have no surface syntax of their own.
ExprPtr chan_prog(const std::string& src,
                  std::initializer_list<std::pair<const char*, std::int64_t>> cs) {
  ExprPtr e = parse_program(src);
  for (auto& [var, id] : cs) e = substitute(e, S(var), v_chan(ChannelId{id}));
  return e;
}

std::multiset<std::string> labels(const rs::State& s) {
  std::multiset<std::string> out;
  for (const rs::Step& st : rs::enumerate_steps(s)) out.insert(st.rule);
  return out;
}

// The unique successor reached by `rule`; fails the test if it is ambiguous.
rs::State after(const rs::State& s, const std::string& rule) {
  std::vector<rs::State> hits;
  for (rs::Step& st : rs::enumerate_steps(s))
    if (st.rule == rule) hits.push_back(std::move(st.next));
  REQUIRE(hits.size() == 1);
  return hits[0];
}

struct Explored {
  std::set<std::string> keys;
  std::set<std::string> rules;
  bool capped = false;
};

Explored explore(const rs::State& s0, int max_depth, std::size_t cap) {
  Explored ex;
  ex.keys.insert(s0.key);
  std::deque<rs::State> frontier{s0};
  for (int d = 0; d < max_depth && !frontier.empty(); d++) {
    std::deque<rs::State> next;
    for (rs::State& st : frontier) {
      for (rs::Step& sp : rs::enumerate_steps(st)) {
        ex.rules.insert(sp.rule);
        if (ex.keys.size() >= cap) {
          ex.capped = true;
          return ex;
        }
        if (ex.keys.insert(sp.next.key).second) next.push_back(std::move(sp.next));
      }
    }
    frontier = std::move(next);
  }
  return ex;
}

std::set<std::string> outcome_set(const ExprPtr& e, int fuel,
                                  bool abort_free = false) {
  rs::OutcomeResult r = rs::outcomes(rs::initial_state(e), fuel, abort_free);
  CHECK(!r.truncated);
  return r.outcomes;
}

}  // namespace

TEST_SUITE("refsem") {

TEST_CASE("canonical keys ignore thread order and channel numbering") {
  CHECK(rs::initial_state(parse_program("1 + 2")).key == "nu*0 {1 + 2}");

  ExprPtr a = chan_prog("send c 1", {{"c", 5}});
  ExprPtr b = chan_prog("recv c", {{"c", 5}});
  rs::State s1 = rs::initial_state_proc(p_par(p_expr(a), p_expr(b)));
  rs::State s2 = rs::initial_state_proc(p_par(p_expr(b), p_expr(a)));
  CHECK(s1.key == s2.key);
  CHECK(s1.key == "nu*0 {recv #c5 ||| send #c5 1}");

  // Restricted channels are renamed apart from their allocation history.
  auto restricted = [](std::int64_t id) {
    ExprPtr snd = chan_prog("send c 1", {{"c", id}});
    ExprPtr rcv = chan_prog("recv c", {{"c", id}});
    return rs::initial_state_proc(
        p_nu(ChannelId{id}, p_par(p_expr(snd), p_expr(rcv))));
  };
  CHECK(restricted(7).key == restricted(3).key);
  CHECK(restricted(7).key == "nu*1 {recv r0 ||| send r0 1}");

  // A restriction over a channel that occurs nowhere is dropped.
  rs::State unused = rs::initial_state_proc(p_nu(ChannelId{9}, p_expr(parse_program("()"))));
  CHECK(unused.key == "nu*0 {()}");

  rs::State twice = rs::canonicalize(restricted(7));
  CHECK(twice.key == restricted(7).key);
}

TEST_CASE("expression steps carry the expected labels") {
  auto only = [](const std::string& src) {
    rs::State s = rs::initial_state(parse_program(src));
    std::multiset<std::string> ls = labels(s);
    REQUIRE(ls.size() == 1);
    return *ls.begin();
  };
  CHECK(only("if true then 1 else 2") == "eift");
  CHECK(only("if false then 1 else 2") == "eiff");
  CHECK(only("let x = 1 in x") == "elet");
  CHECK(only("1 + 2") == "eop");
  CHECK(only("(fun f(x: int) -> x) 3") == "eapp");
  CHECK(only("newchan[int]") == "cnewchan");
  CHECK(only("spawn (fun t() -> ())") == "cspawn");

  rs::State ifs = rs::initial_state(parse_program("if true then 1 else 2"));
  CHECK(after(ifs, "eift").key == "nu*0 {1}");

  rs::State flip = rs::initial_state(parse_program("flip ()"));
  CHECK(labels(flip) == std::multiset<std::string>{"eflipt", "eflipf"});
  CHECK(after(flip, "eflipt").key == "nu*0 {true}");
  CHECK(after(flip, "eflipf").key == "nu*0 {false}");

  rs::State nc = rs::initial_state(parse_program("newchan[int]"));
  CHECK(after(nc, "cnewchan").key == "nu*1 {r0}");

  rs::State sp = rs::initial_state(parse_program("spawn (fun t() -> ())"));
  CHECK(after(sp, "cspawn").key == "nu*0 {() ||| (fun t() -> ()) ()}");

  // A value applied to a value that is not a function is stuck, not a step.
  rs::State stuck = rs::initial_state(e_app(e_int(1), e_unit()));
  CHECK(rs::is_terminal(stuck));
  CHECK(rs::outcome_of_terminal(stuck) == "{stuck}");
}

TEST_CASE("transaction lifecycle: enter, commit, dissolve, abort") {
  rs::State s = rs::initial_state(parse_program("atomic k { commit k } else { 0 }"));
  rs::State entered = after(s, "tratomic");
  CHECK(entered.key == "nu*0 {[[ {commit k.0} |>k.0 {0} ]]}");
  CHECK(labels(entered) == std::multiset<std::string>{"trcommit", "trabort"});

  rs::State committed = after(entered, "trcommit");
  CHECK(committed.key == "nu*0 {[[ {() ||| co k.0} |>k.0 {0} ]]}");

  rs::State dissolved = after(committed, "trco");
  CHECK(dissolved.key == "nu*0 {()}");
  CHECK(rs::outcome_of_terminal(dissolved) == "{()}");

  CHECK(after(entered, "trabort").key == "nu*0 {0}");

  // The alternative is frozen: no steps reduce inside it.
  rs::State frozen =
      after(rs::initial_state(parse_program("atomic k { 0 } else { 1 + 2 }")), "tratomic");
  CHECK(labels(frozen) == std::multiset<std::string>{"trabort"});
}

TEST_CASE("commit reaches outcomes that aborting alone cannot") {
  ExprPtr e = parse_program("atomic k { commit k; 1 } else { 2 }");
  CHECK(outcome_set(e, 20) == std::set<std::string>{"{1}", "{2}"});
  CHECK(outcome_set(e, 20, true) == std::set<std::string>{"{1}"});

  // Without a commit the default can never be kept.
  ExprPtr never = parse_program("atomic k { 1 } else { 2 }");
  CHECK(outcome_set(never, 20) == std::set<std::string>{"{2}"});
  CHECK(outcome_set(never, 20, true).empty());
}

TEST_CASE("synchronization transfers the payload and is labeled by side") {
  // Sorted thread order puts "let ..." before "recv ...", so the sender
  // holds the lower index here.
  ExprPtr snd1 = chan_prog("let z = send c 1 in z", {{"c", 1}});
  ExprPtr rcv1 = chan_prog("recv c; 0", {{"c", 1}});
  rs::State s1 = rs::initial_state_proc(p_par(p_expr(snd1), p_expr(rcv1)));
  CHECK(labels(s1).count("csyncsr") == 1);
  CHECK(after(s1, "csyncsr").key == "nu*0 {1; 0 ||| let z = () in z}");

  // And here the receiver does.
  ExprPtr snd2 = chan_prog("send c 1; 0", {{"c", 1}});
  ExprPtr rcv2 = chan_prog("let z = recv c in z", {{"c", 1}});
  rs::State s2 = rs::initial_state_proc(p_par(p_expr(snd2), p_expr(rcv2)));
  CHECK(labels(s2).count("csyncrs") == 1);
  CHECK(after(s2, "csyncrs").key == "nu*0 {(); 0 ||| let z = 1 in z}");

  // No cross-level synchronization: a sender outside a transaction cannot
  // meet a receiver inside it without an embedding first.
  ExprPtr rcv3 = chan_prog("recv c", {{"c", 1}});
  rs::State cross = rs::initial_state_proc(
      p_par(p_expr(snd1), p_trans(TxnId{0, S("k")}, p_expr(rcv3), p_expr(parse_program("0")))));
  std::multiset<std::string> ls = labels(cross);
  CHECK(ls.count("csyncsr") == 0);
  CHECK(ls.count("csyncrs") == 0);
  CHECK(ls.count("tremb") == 1);
}

TEST_CASE("embedding copies the sibling into default and alternative") {
  TxnId k{0, S("k")};
  ExprPtr p = chan_prog("send c 1", {{"c", 1}});
  ExprPtr q = chan_prog("recv c", {{"c", 1}});
  ExprPtr alt = parse_program("0");

  rs::State s = rs::initial_state_proc(
      p_par(p_expr(p), p_trans(k, p_expr(q), p_expr(alt))));
  rs::State embedded = after(s, "tremb");
  rs::State expect = rs::initial_state_proc(
      p_trans(k, p_par(p_expr(q), p_expr(p)), p_par(p_expr(alt), p_expr(p))));
  CHECK(embedded.key == expect.key);

  // After the embedding the two sides can synchronize; aborting instead
  // restores the sender next to the alternative.
  CHECK(labels(embedded).count("csyncrs") + labels(embedded).count("csyncsr") == 1);
  rs::State aborted = after(embedded, "trabort");
  CHECK(aborted.key ==
        rs::initial_state_proc(p_par(p_expr(alt), p_expr(p))).key);
}

TEST_CASE("co tokens and whole transactions embed like any sibling") {
  TxnId k{0, S("k")}, l{1, S("l")};
  ExprPtr zero = parse_program("0");
  ExprPtr one = parse_program("1");

  // co k sits next to l inside k's default; embedding moves it into l.
  rs::State s = rs::initial_state_proc(p_trans(
      k,
      p_par(p_co(k), p_trans(l, p_expr(zero), p_expr(one))),
      p_expr(parse_program("2"))));
  std::multiset<std::string> ls = labels(s);
  CHECK(ls.count("tremb") == 1);  // the co token moves into l
  CHECK(ls.count("trco") == 1);   // co k is at k's own level
  rs::State expect = rs::initial_state_proc(p_trans(
      k,
      p_trans(l, p_par(p_expr(zero), p_co(k)), p_par(p_expr(one), p_co(k))),
      p_expr(parse_program("2"))));
  bool found = false;
  for (rs::Step& st : rs::enumerate_steps(s))
    if (st.rule == "tremb" && st.next.key == expect.key) found = true;
  CHECK(found);

  // Two sibling transactions admit both mutual embeddings.
  rs::State two = rs::initial_state_proc(p_par(
      p_trans(k, p_expr(zero), p_expr(zero)),
      p_trans(l, p_expr(one), p_expr(one))));
  CHECK(labels(two).count("tremb") == 2);
}

TEST_CASE("dissolution erases every copy of the committing token") {
  TxnId k{0, S("k")}, l{1, S("l")};
  ExprPtr zero = parse_program("0");
  // k's default: co k at top level plus a copy embedded inside l.
  rs::State s = rs::initial_state_proc(p_trans(
      k,
      p_par(p_co(k),
            p_trans(l, p_par(p_expr(zero), p_co(k)), p_par(p_expr(zero), p_co(k)))),
      p_expr(parse_program("1"))));
  rs::State dissolved = after(s, "trco");
  CHECK(dissolved.key ==
        rs::initial_state_proc(p_trans(l, p_expr(zero), p_expr(zero))).key);
}

TEST_CASE("nested transactions commit from the inside out") {
  // atomic k { spawn (fun t() -> recv c; commit k) } else { () };
  // atomic l { recv d; commit l } else { () }
  // running next to   send d (); send c ()
  std::string main_src =
      "atomic k { spawn (fun t() -> recv c; commit k) } else { () }; "
      "atomic l { recv d; commit l } else { () }";
  ExprPtr main_e = chan_prog(main_src, {{"c", 1}, {"d", 2}});
  ExprPtr p = chan_prog("send d (); send c ()", {{"c", 1}, {"d", 2}});
  rs::State init = rs::initial_state_proc(p_par(p_expr(main_e), p_expr(p)));

  TxnId k{0, S("k")}, l{1, S("l")};
  auto rk = [&](const std::string& src) {
    return substitute_txn(chan_prog(src, {{"c", 1}, {"d", 2}}), S("k"), k);
  };
  auto rl = [&](const std::string& src) {
    return substitute_txn(chan_prog(src, {{"c", 1}, {"d", 2}}), S("l"), l);
  };
  ExprPtr recv_c = rk("recv c; commit k");
  ExprPtr recv_d = rl("recv d; commit l");
  ExprPtr unit_e = parse_program("()");
  ExprPtr k_alt = chan_prog("(); atomic l { recv d; commit l } else { () }",
                            {{"c", 1}, {"d", 2}});

  // The state once both transactions have started.
  rs::State started = rs::initial_state_proc(p_par(
      p_trans(k,
              p_par(p_expr(recv_c), p_trans(l, p_expr(recv_d), p_expr(unit_e))),
              p_expr(k_alt)),
      p_expr(p)));

  // After embedding the sender into k and then into l.
  rs::State both_embedded = rs::initial_state_proc(p_trans(
      k,
      p_par(p_expr(recv_c),
            p_trans(l, p_par(p_expr(recv_d), p_expr(p)),
                    p_par(p_expr(unit_e), p_expr(p)))),
      p_par(p_expr(k_alt), p_expr(p))));

  // After the synchronization on d (and draining the spent sequencing).
  rs::State after_d = rs::initial_state_proc(p_trans(
      k,
      p_par(p_expr(recv_c),
            p_trans(l,
                    p_par(p_expr(chan_prog("send c ()", {{"c", 1}})),
                          p_expr(rl("commit l"))),
                    p_par(p_expr(unit_e), p_expr(p)))),
      p_par(p_expr(k_alt), p_expr(p))));

  // Everything has synchronized and both commits are pending, innermost
  // holding both tokens.
  rs::State pre_commit = rs::initial_state_proc(p_trans(
      k,
      p_trans(l,
              p_par(p_par(p_expr(unit_e), p_expr(unit_e)),
                    p_par(p_expr(unit_e), p_par(p_co(k), p_co(l)))),
              p_par(p_expr(recv_c), p_par(p_expr(p), p_expr(unit_e)))),
      p_par(p_expr(k_alt), p_expr(p))));

  Explored ex = explore(init, 40, 60000);
  CHECK(!ex.capped);
  CHECK(ex.keys.count(started.key) == 1);
  CHECK(ex.keys.count(both_embedded.key) == 1);
  CHECK(ex.keys.count(after_d.key) == 1);
  CHECK(ex.keys.count(pre_commit.key) == 1);

  // Without aborts the only quiescent outcome is full commitment.
  rs::OutcomeResult af = rs::outcomes(init, 100, true);
  CHECK(!af.truncated);
  CHECK(af.outcomes == std::set<std::string>{"{(), (), ()}"});

  rs::OutcomeResult full = rs::outcomes(init, 100, false);
  CHECK(!full.truncated);
  CHECK(full.outcomes.count("{(), (), ()}") == 1);
  CHECK(full.outcomes.size() > 1);
}

TEST_CASE("restarting transactions revisit canonical states") {
  // Each round allocates a channel that is forgotten on abort; dropping
  // unused restrictions is what makes the loop close on itself.
  std::string src =
      "let r = (fun r(): unit -> "
      "atomic k { let c = newchan[int] in commit k } else { r () }) in r ()";
  ExprPtr e = parse_program(src);
  rs::OutcomeResult res = rs::outcomes(rs::initial_state(e), 60, false);
  CHECK(!res.truncated);
  CHECK(res.outcomes == std::set<std::string>{"{()}"});
  CHECK(res.states_explored < 200);
}

TEST_CASE("terminal outcomes distinguish values, barbs, and deadlock") {
  CHECK(outcome_set(parse_program("(1 + 2, true)"), 5) ==
        std::set<std::string>{"{(3, true)}"});

  // An offer on a free channel is observable; blocking on a restricted one
  // is not.
  rs::State barb = rs::initial_state_proc(p_expr(chan_prog("send c 7", {{"c", 4}})));
  CHECK(rs::is_terminal(barb));
  CHECK(rs::outcome_of_terminal(barb) == "{send@#c4}");
  rs::State rbarb = rs::initial_state_proc(p_expr(chan_prog("recv c", {{"c", 4}})));
  CHECK(rs::outcome_of_terminal(rbarb) == "{recv@#c4}");

  CHECK(outcome_set(parse_program("recv newchan[int]"), 5) ==
        std::set<std::string>{"{}"});

  ExprPtr handoff = parse_program(
      "let c = newchan[int] in let _ = spawn (fun t() -> send c 5) in recv c");
  CHECK(outcome_set(handoff, 20) == std::set<std::string>{"{(), 5}"});

  // Channel values print identically regardless of identity.
  ExprPtr leak = parse_program("newchan[int]");
  CHECK(outcome_set(leak, 5) == std::set<std::string>{"{<chan>}"});
}

TEST_CASE("random well-typed programs explore cleanly") {
  gen::Rng rng(0xc0ffee5eedULL);
  int explored_some = 0;
  for (int i = 0; i < 30; i++) {
    TypePtr ty = gen::random_type(rng, 2);
    ExprPtr e = gen::random_typed_expr(rng, ty, 4);
    rs::OutcomeResult r = rs::outcomes(rs::initial_state(e), 10, false, 1500);
    CHECK(r.states_explored >= 1);
    if (!r.truncated && !r.outcomes.empty()) explored_some++;
  }
  CHECK(explored_some >= 10);
}

}  // TEST_SUITE
