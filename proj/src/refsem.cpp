#include "tcml/refsem.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <map>
#include <unordered_set>
#include <utility>

#include "tcml/ast_ops.hpp"
#include "tcml/errors.hpp"

namespace tcml::refsem {
namespace {

// ---------------------------------------------------------------------------
// Renaming of restricted channels and transaction instances.

struct Renaming {
  std::map<std::int64_t, std::int64_t> chans;
  std::map<std::int64_t, std::int64_t> txns;

  ChannelId chan(ChannelId c) const {
    auto it = chans.find(c.v);
    return it == chans.end() ? c : ChannelId{it->second};
  }
  TxnId txn(TxnId t) const {
    auto it = txns.find(t.inst);
    return it == txns.end() ? t : TxnId{it->second, t.src};
  }
  bool empty() const { return chans.empty() && txns.empty(); }
};

ExprPtr rename_expr(const ExprPtr& e, const Renaming& r);

ValuePtr rename_value(const ValuePtr& v, const Renaming& r) {
  switch (v->kind) {
    case Value::Kind::Chan: {
      ChannelId c = r.chan(v->chan);
      return c == v->chan ? v : v_chan(c);
    }
    case Value::Kind::Pair: {
      ValuePtr a = rename_value(v->fst, r), b = rename_value(v->snd, r);
      if (a == v->fst && b == v->snd) return v;
      return v_pair(std::move(a), std::move(b));
    }
    case Value::Kind::Fun: {
      ExprPtr b = rename_expr(v->body, r);
      if (b == v->body) return v;
      return v_fun(v->self, v->param, v->param_type, v->ret_type, std::move(b));
    }
    default:
      return v;
  }
}

ExprPtr rename_expr(const ExprPtr& e, const Renaming& r) {
  switch (e->kind) {
    case Expr::Kind::Val: {
      ValuePtr v = rename_value(e->val, r);
      return v == e->val ? e : e_val(std::move(v));
    }
    case Expr::Kind::Commit: {
      if (!e->txn.resolved()) return e;
      TxnId t = r.txn(e->txn.id());
      if (t.inst == e->txn.inst) return e;
      TxnRef nr;
      nr.name = e->txn.name;
      nr.inst = t.inst;
      return e_commit(nr);
    }
    case Expr::Kind::NewChan:
    case Expr::Kind::Flip:
      return e;
    default: {
      ExprPtr a = e->a ? rename_expr(e->a, r) : nullptr;
      ExprPtr b = e->b ? rename_expr(e->b, r) : nullptr;
      ExprPtr c = e->c ? rename_expr(e->c, r) : nullptr;
      if (a == e->a && b == e->b && c == e->c) return e;
      switch (e->kind) {
        case Expr::Kind::Pair: return e_pair(std::move(a), std::move(b));
        case Expr::Kind::App: return e_app(std::move(a), std::move(b));
        case Expr::Kind::Op: return e_op(e->op, std::move(a));
        case Expr::Kind::Let:
          return e_let(e->let_name, std::move(a), std::move(b));
        case Expr::Kind::If:
          return e_if(std::move(a), std::move(b), std::move(c));
        case Expr::Kind::Send: return e_send(std::move(a), std::move(b));
        case Expr::Kind::Recv: return e_recv(std::move(a));
        case Expr::Kind::Spawn: return e_spawn(std::move(a));
        case Expr::Kind::Atomic:
          return e_atomic(e->txn_binder, std::move(a), std::move(b));
        default: throw Error("rename_expr: bad expr");
      }
    }
  }
}

TStatePtr freeze(TState n) { return std::make_shared<const TState>(std::move(n)); }

// Deep erasure of co tokens for a dissolving transaction. Copies of the
// token may sit inside nested transactions it was embedded into; once the
// transaction is gone they could never fire, so they are removed everywhere.
TStatePtr erase_co(const TStatePtr& n, const TxnId& id) {
  TState out;
  out.threads = n->threads;
  for (const TxnId& c : n->cos)
    if (!(c == id)) out.cos.push_back(c);
  out.children.reserve(n->children.size());
  for (const TState::Child& ch : n->children)
    out.children.push_back({ch.id, erase_co(ch.dflt, id), erase_co(ch.alt, id)});
  return freeze(std::move(out));
}

TStatePtr rename_node(const TStatePtr& n, const Renaming& r) {
  TState out;
  out.threads.reserve(n->threads.size());
  for (const ExprPtr& t : n->threads) out.threads.push_back(rename_expr(t, r));
  out.cos.reserve(n->cos.size());
  for (const TxnId& c : n->cos) out.cos.push_back(r.txn(c));
  out.children.reserve(n->children.size());
  for (const TState::Child& ch : n->children)
    out.children.push_back(
        {r.txn(ch.id), rename_node(ch.dflt, r), rename_node(ch.alt, r)});
  return freeze(std::move(out));
}

// ---------------------------------------------------------------------------
// Deterministic traversal collecting channel and transaction occurrences.

void walk_value(const ValuePtr& v, const std::function<void(ChannelId)>& fc,
                const std::function<void(TxnId)>& ft);

void walk_expr(const ExprPtr& e, const std::function<void(ChannelId)>& fc,
               const std::function<void(TxnId)>& ft) {
  if (e->kind == Expr::Kind::Commit && e->txn.resolved()) ft(e->txn.id());
  if (e->val) walk_value(e->val, fc, ft);
  if (e->a) walk_expr(e->a, fc, ft);
  if (e->b) walk_expr(e->b, fc, ft);
  if (e->c) walk_expr(e->c, fc, ft);
}

void walk_value(const ValuePtr& v, const std::function<void(ChannelId)>& fc,
                const std::function<void(TxnId)>& ft) {
  switch (v->kind) {
    case Value::Kind::Chan: fc(v->chan); return;
    case Value::Kind::Pair:
      walk_value(v->fst, fc, ft);
      walk_value(v->snd, fc, ft);
      return;
    case Value::Kind::Fun: walk_expr(v->body, fc, ft); return;
    default: return;
  }
}

void walk_node(const TStatePtr& n, const std::function<void(ChannelId)>& fc,
               const std::function<void(TxnId)>& ft) {
  for (const ExprPtr& t : n->threads) walk_expr(t, fc, ft);
  for (const TxnId& c : n->cos) ft(c);
  for (const TState::Child& ch : n->children) {
    ft(ch.id);
    walk_node(ch.dflt, fc, ft);
    walk_node(ch.alt, fc, ft);
  }
}

// ---------------------------------------------------------------------------
// Serialization.

PrintOptions concrete_opts() {
  PrintOptions po;
  po.chan_name = [](ChannelId c) {
    if (c.v >= kCanonBase) return "r" + std::to_string(c.v - kCanonBase);
    return "#c" + std::to_string(c.v);
  };
  return po;
}

// Restricted channels and transaction instances erased: used for an ordering
// that does not depend on the pre-canonical numbering.
PrintOptions erased_opts(const std::set<std::int64_t>& restricted) {
  PrintOptions po;
  po.chan_name = [restricted](ChannelId c) {
    if (restricted.count(c.v) || c.v >= kCanonBase) return std::string("r?");
    return "#c" + std::to_string(c.v);
  };
  po.txn_name = [](TxnId t) { return t.src.empty() ? "?" : t.src.str() + ".?"; };
  return po;
}

std::string co_text(const TxnId& t, const PrintOptions& po) {
  return "co " + (po.txn_name ? po.txn_name(t) : t.show());
}

std::string ser_node(const TStatePtr& n, const PrintOptions& po) {
  std::string out = "{";
  bool first = true;
  auto add = [&](const std::string& s) {
    if (!first) out += " ||| ";
    first = false;
    out += s;
  };
  for (const ExprPtr& t : n->threads) add(print_expr(t, po));
  for (const TxnId& c : n->cos) add(co_text(c, po));
  for (const TState::Child& ch : n->children)
    add("[[ " + ser_node(ch.dflt, po) + " |>" +
        (po.txn_name ? po.txn_name(ch.id) : ch.id.show()) + " " +
        ser_node(ch.alt, po) + " ]]");
  return out + "}";
}

std::string ser_state(const State& s, const PrintOptions& po) {
  return "nu*" + std::to_string(s.restricted.size()) + " " + ser_node(s.root, po);
}

// Sorts node contents by (erased, concrete) serialization.
TStatePtr sort_node(const TStatePtr& n, const PrintOptions& epo,
                    const PrintOptions& cpo) {
  TState out;
  std::vector<TState::Child> kids;
  kids.reserve(n->children.size());
  for (const TState::Child& ch : n->children)
    kids.push_back({ch.id, sort_node(ch.dflt, epo, cpo), sort_node(ch.alt, epo, cpo)});

  using Keyed = std::pair<std::pair<std::string, std::string>, std::size_t>;
  auto order = [](std::vector<Keyed>& v) {
    std::stable_sort(v.begin(), v.end(),
                     [](const Keyed& a, const Keyed& b) { return a.first < b.first; });
  };

  std::vector<Keyed> kt;
  for (std::size_t i = 0; i < n->threads.size(); i++)
    kt.push_back({{print_expr(n->threads[i], epo), print_expr(n->threads[i], cpo)}, i});
  order(kt);
  for (auto& [k, i] : kt) out.threads.push_back(n->threads[i]);

  std::vector<Keyed> kc;
  for (std::size_t i = 0; i < n->cos.size(); i++)
    kc.push_back({{co_text(n->cos[i], epo), co_text(n->cos[i], cpo)}, i});
  order(kc);
  for (auto& [k, i] : kc) out.cos.push_back(n->cos[i]);

  std::vector<Keyed> kk;
  for (std::size_t i = 0; i < kids.size(); i++) {
    std::string e = ser_node(kids[i].dflt, epo) + "|" + ser_node(kids[i].alt, epo);
    std::string c = (cpo.txn_name ? cpo.txn_name(kids[i].id) : kids[i].id.show()) +
                    "|" + ser_node(kids[i].dflt, cpo) + "|" + ser_node(kids[i].alt, cpo);
    kk.push_back({{e, c}, i});
  }
  order(kk);
  for (auto& [k, i] : kk) out.children.push_back(kids[i]);

  return freeze(std::move(out));
}

std::int64_t max_txn_inst(const TStatePtr& n) {
  std::int64_t m = -1;
  walk_node(n, [](ChannelId) {}, [&m](TxnId t) { m = std::max(m, t.inst); });
  return m;
}

}  // namespace

TStatePtr make_node(std::vector<ExprPtr> threads, std::vector<TxnId> cos,
                    std::vector<TState::Child> children) {
  TState n;
  n.threads = std::move(threads);
  n.cos = std::move(cos);
  n.children = std::move(children);
  return freeze(std::move(n));
}

State canonicalize(State s) {
  // Drop restrictions on channels that no longer occur anywhere; without
  // this, looping programs never revisit a canonical state.
  {
    std::set<std::int64_t> used;
    walk_node(s.root, [&used](ChannelId c) { used.insert(c.v); }, [](TxnId) {});
    std::vector<ChannelId> kept;
    for (ChannelId c : s.restricted)
      if (used.count(c.v)) kept.push_back(c);
    s.restricted = std::move(kept);
  }

  std::string prev;
  for (int pass = 0; pass < 8; pass++) {
    std::set<std::int64_t> restr;
    for (ChannelId c : s.restricted) restr.insert(c.v);
    PrintOptions epo = erased_opts(restr);
    PrintOptions cpo = concrete_opts();

    s.root = sort_node(s.root, epo, cpo);

    Renaming r;
    std::int64_t next_c = 0, next_t = 0;
    walk_node(
        s.root,
        [&](ChannelId c) {
          if (restr.count(c.v) && !r.chans.count(c.v))
            r.chans[c.v] = kCanonBase + next_c++;
        },
        [&](TxnId t) {
          if (t.valid() && !r.txns.count(t.inst)) r.txns[t.inst] = next_t++;
        });

    if (!r.empty() || pass == 0) s.root = rename_node(s.root, r);
    s.restricted.clear();
    for (std::int64_t i = 0; i < next_c; i++)
      s.restricted.push_back(ChannelId{kCanonBase + i});
    s.next_chan = kCanonBase + next_c;
    s.next_txn = next_t;

    std::string key = ser_state(s, cpo);
    if (key == prev) break;
    prev = std::move(key);
  }
  s.key = prev;
  return s;
}

State initial_state(const ExprPtr& program) {
  State s;
  s.root = make_node({program});
  s.next_chan = 0;
  s.next_txn = 0;
  return canonicalize(std::move(s));
}

namespace {
void flatten(const ProcPtr& p, TState& node, std::vector<ChannelId>& restricted) {
  switch (p->kind) {
    case Process::Kind::ExprP:
      node.threads.push_back(p->expr);
      return;
    case Process::Kind::Par:
      flatten(p->p1, node, restricted);
      flatten(p->p2, node, restricted);
      return;
    case Process::Kind::Nu:
      restricted.push_back(p->chan);
      flatten(p->p1, node, restricted);
      return;
    case Process::Kind::Trans: {
      TState d, a;
      flatten(p->p1, d, restricted);
      flatten(p->p2, a, restricted);
      node.children.push_back({p->txn, freeze(std::move(d)), freeze(std::move(a))});
      return;
    }
    case Process::Kind::Co:
      node.cos.push_back(p->txn);
      return;
  }
}
}  // namespace

State initial_state_proc(const ProcPtr& p) {
  State s;
  TState root;
  flatten(p, root, s.restricted);
  s.root = freeze(std::move(root));
  std::int64_t maxc = -1;
  walk_node(s.root, [&maxc](ChannelId c) { maxc = std::max(maxc, c.v); },
            [](TxnId) {});
  s.next_chan = maxc + 1;
  s.next_txn = max_txn_inst(s.root) + 1;
  return canonicalize(std::move(s));
}

// ---------------------------------------------------------------------------
// Step enumeration.

namespace {

struct Enumerator {
  const State& s;
  std::vector<Step>& out;

  using Rebuild = std::function<TStatePtr(TStatePtr)>;

  void push(const std::string& rule, TStatePtr new_root,
            std::vector<ChannelId> extra_restricted = {},
            std::int64_t chans_used = 0, std::int64_t txns_used = 0) {
    State ns;
    ns.restricted = s.restricted;
    for (ChannelId c : extra_restricted) ns.restricted.push_back(c);
    ns.root = std::move(new_root);
    ns.next_chan = s.next_chan + chans_used;
    ns.next_txn = s.next_txn + txns_used;
    out.push_back({rule, canonicalize(std::move(ns))});
  }

  static TState copy(const TStatePtr& n) { return *n; }

  void node(const TStatePtr& n, const Rebuild& rb) {
    struct Comm {
      std::size_t idx;
      bool is_send;
      ChannelId chan;
      ValuePtr payload;  // sends only
      EvalContext ctx;
    };
    std::vector<Comm> comms;

    for (std::size_t ti = 0; ti < n->threads.size(); ti++) {
      Decomposition d = decompose(n->threads[ti]);
      if (d.value) continue;

      auto replace_thread = [&](ExprPtr nt) {
        TState c = copy(n);
        c.threads[ti] = std::move(nt);
        return c;
      };

      switch (d.redex_kind) {
        case RedexKind::Beta:
        case RedexKind::Delta:
        case RedexKind::LetR:
        case RedexKind::IfR: {
          std::string rule;
          switch (d.redex_kind) {
            case RedexKind::Beta: rule = "eapp"; break;
            case RedexKind::Delta: rule = "eop"; break;
            case RedexKind::LetR: rule = "elet"; break;
            default: {
              ValuePtr c = *as_value(d.redex->a);
              if (c->kind != Value::Kind::Bool) continue;  // stuck
              rule = c->b ? "eift" : "eiff";
              break;
            }
          }
          ExprPtr stepped;
          try {
            stepped = step_pure_redex(d.redex, d.redex_kind);
          } catch (const StuckError&) {
            continue;  // stuck thread, no step
          }
          push(rule, rb(freeze(replace_thread(plug(d.ctx, stepped)))));
          break;
        }
        case RedexKind::FlipR:
          push("eflipt", rb(freeze(replace_thread(plug(d.ctx, e_bool(true))))));
          push("eflipf", rb(freeze(replace_thread(plug(d.ctx, e_bool(false))))));
          break;
        case RedexKind::NewChanR: {
          ChannelId c{s.next_chan};
          push("cnewchan",
               rb(freeze(replace_thread(plug(d.ctx, e_val(v_chan(c)))))),
               {c}, 1, 0);
          break;
        }
        case RedexKind::SpawnR: {
          ValuePtr v = *as_value(d.redex->a);
          TState c = copy(n);
          c.threads[ti] = plug(d.ctx, e_unit());
          c.threads.push_back(e_app(e_val(v), e_unit()));
          push("cspawn", rb(freeze(std::move(c))));
          break;
        }
        case RedexKind::AtomicR: {
          TxnId inst{s.next_txn, d.redex->txn_binder};
          ExprPtr dflt = plug(
              d.ctx, substitute_txn(d.redex->a, d.redex->txn_binder, inst));
          ExprPtr alt = plug(d.ctx, d.redex->b);
          TState c = copy(n);
          c.threads.erase(c.threads.begin() + static_cast<std::ptrdiff_t>(ti));
          c.children.push_back({inst, make_node({std::move(dflt)}),
                                make_node({std::move(alt)})});
          push("tratomic", rb(freeze(std::move(c))), {}, 0, 1);
          break;
        }
        case RedexKind::CommitR: {
          if (!d.redex->txn.resolved()) continue;  // stuck: unbound name
          TState c = copy(n);
          c.threads[ti] = plug(d.ctx, e_unit());
          c.cos.push_back(d.redex->txn.id());
          push("trcommit", rb(freeze(std::move(c))));
          break;
        }
        case RedexKind::SendR: {
          ValuePtr ch = *as_value(d.redex->a);
          if (ch->kind != Value::Kind::Chan) continue;  // stuck
          comms.push_back({ti, true, ch->chan, *as_value(d.redex->b), d.ctx});
          break;
        }
        case RedexKind::RecvR: {
          ValuePtr ch = *as_value(d.redex->a);
          if (ch->kind != Value::Kind::Chan) continue;  // stuck
          comms.push_back({ti, false, ch->chan, nullptr, d.ctx});
          break;
        }
      }
    }

    // Same-level synchronization on a shared channel.
    for (const Comm& snd : comms) {
      if (!snd.is_send) continue;
      for (const Comm& rcv : comms) {
        if (rcv.is_send || rcv.chan != snd.chan) continue;
        TState c = copy(n);
        c.threads[snd.idx] = plug(snd.ctx, e_unit());
        c.threads[rcv.idx] = plug(rcv.ctx, e_val(snd.payload));
        push(snd.idx < rcv.idx ? "csyncsr" : "csyncrs", rb(freeze(std::move(c))));
      }
    }

    for (std::size_t ci = 0; ci < n->children.size(); ci++) {
      const TState::Child& child = n->children[ci];

      // Embedding copies a sibling unit into both sides of the transaction.
      auto embed = [&](const std::function<void(TState&)>& remove,
                       const std::function<void(TState&)>& insert) {
        TState c = copy(n);
        remove(c);
        TState d = copy(child.dflt), a = copy(child.alt);
        insert(d);
        insert(a);
        c.children[ci].dflt = freeze(std::move(d));
        c.children[ci].alt = freeze(std::move(a));
        push("tremb", rb(freeze(std::move(c))));
      };
      for (std::size_t ti = 0; ti < n->threads.size(); ti++) {
        ExprPtr t = n->threads[ti];
        embed([ti](TState& c) {
                c.threads.erase(c.threads.begin() + static_cast<std::ptrdiff_t>(ti));
              },
              [t](TState& d) { d.threads.push_back(t); });
      }
      for (std::size_t oi = 0; oi < n->cos.size(); oi++) {
        TxnId co = n->cos[oi];
        embed([oi](TState& c) {
                c.cos.erase(c.cos.begin() + static_cast<std::ptrdiff_t>(oi));
              },
              [co](TState& d) { d.cos.push_back(co); });
      }
      for (std::size_t cj = 0; cj < n->children.size(); cj++) {
        if (cj == ci) continue;
        TState::Child sib = n->children[cj];
        // Index of ci after removing cj.
        std::size_t ci2 = ci > cj ? ci - 1 : ci;
        TState c = copy(n);
        c.children.erase(c.children.begin() + static_cast<std::ptrdiff_t>(cj));
        TState d = copy(c.children[ci2].dflt), a = copy(c.children[ci2].alt);
        d.children.push_back(sib);
        a.children.push_back(sib);
        c.children[ci2].dflt = freeze(std::move(d));
        c.children[ci2].alt = freeze(std::move(a));
        push("tremb", rb(freeze(std::move(c))));
      }

      // Commit: a matching co token at the transaction's own level dissolves
      // it, splicing the default upward. Other co tokens survive the splice.
      bool has_co = false;
      for (const TxnId& co : child.dflt->cos)
        if (co == child.id) has_co = true;
      if (has_co) {
        TStatePtr spliced = erase_co(child.dflt, child.id);
        TState c = copy(n);
        c.children.erase(c.children.begin() + static_cast<std::ptrdiff_t>(ci));
        for (const ExprPtr& t : spliced->threads) c.threads.push_back(t);
        for (const TxnId& co : spliced->cos) c.cos.push_back(co);
        for (const TState::Child& k : spliced->children) c.children.push_back(k);
        push("trco", rb(freeze(std::move(c))));
      }

      // Abort replaces the transaction by its alternative.
      {
        TState c = copy(n);
        c.children.erase(c.children.begin() + static_cast<std::ptrdiff_t>(ci));
        for (const ExprPtr& t : child.alt->threads) c.threads.push_back(t);
        for (const TxnId& co : child.alt->cos) c.cos.push_back(co);
        for (const TState::Child& k : child.alt->children) c.children.push_back(k);
        push("trabort", rb(freeze(std::move(c))));
      }

      // Steps inside the live default, lifted through this node.
      Rebuild inner = [n, ci, &rb](TStatePtr replacement) {
        TState c = *n;
        c.children[ci].dflt = std::move(replacement);
        return rb(freeze(std::move(c)));
      };
      node(child.dflt, inner);
    }
  }
};

ExprPtr normalize_thread(ExprPtr th) {
  for (int i = 0; i < 10000; i++) {
    Decomposition d = decompose(th);
    if (d.value) return th;
    switch (d.redex_kind) {
      case RedexKind::Beta:
      case RedexKind::Delta:
      case RedexKind::LetR:
      case RedexKind::IfR:
        break;
      default:
        return th;
    }
    try {
      th = plug(d.ctx, step_pure_redex(d.redex, d.redex_kind));
    } catch (const StuckError&) {
      return th;
    }
  }
  return th;
}

TStatePtr normalize_node(const TStatePtr& n) {
  TState out;
  out.threads.reserve(n->threads.size());
  for (const ExprPtr& t : n->threads) out.threads.push_back(normalize_thread(t));
  out.cos = n->cos;
  out.children.reserve(n->children.size());
  for (const TState::Child& ch : n->children)
    out.children.push_back(
        {ch.id, normalize_node(ch.dflt), normalize_node(ch.alt)});
  return freeze(std::move(out));
}

bool transaction_free(const TStatePtr& n) { return n->children.empty(); }

// With aborts disabled, alternative sides are write-only: no enabled rule
// reads them and no outcome mentions them. Replacing every alternative by a
// shared empty node quotients away snapshot bookkeeping that would otherwise
// keep observably equal states distinct.
TStatePtr strip_alternatives(const TStatePtr& n) {
  static const TStatePtr kHole = make_node({});
  if (n->children.empty()) return n;
  TState out;
  out.threads = n->threads;
  out.cos = n->cos;
  out.children.reserve(n->children.size());
  for (const TState::Child& ch : n->children)
    out.children.push_back({ch.id, strip_alternatives(ch.dflt), kHole});
  return freeze(std::move(out));
}

}  // namespace

std::vector<Step> enumerate_steps(const State& s) {
  std::vector<Step> out;
  Enumerator en{s, out};
  en.node(s.root, [](TStatePtr n) { return n; });
  return out;
}

bool is_terminal(const State& s) { return enumerate_steps(s).empty(); }

std::string outcome_of_terminal(const State& s) {
  // Terminal states are transaction free: any transaction admits an abort.
  std::set<std::int64_t> restr;
  for (ChannelId c : s.restricted) restr.insert(c.v);

  PrintOptions vo;
  vo.chan_name = [](ChannelId) { return std::string("<chan>"); };

  std::vector<std::string> elems;
  for (const ExprPtr& t : s.root->threads) {
    Decomposition d = decompose(t);
    if (d.value) {
      elems.push_back(print_value(*d.value, vo));
      continue;
    }
    if (d.redex_kind == RedexKind::SendR || d.redex_kind == RedexKind::RecvR) {
      auto ch = *as_value(d.redex->a);
      if (ch->kind == Value::Kind::Chan && !restr.count(ch->chan.v)) {
        elems.push_back((d.redex_kind == RedexKind::SendR ? "send@#c" : "recv@#c") +
                        std::to_string(ch->chan.v));
        continue;
      }
      if (ch->kind == Value::Kind::Chan) continue;  // blocked on a restricted channel
    }
    elems.push_back("stuck");
  }
  std::sort(elems.begin(), elems.end());
  std::string out = "{";
  for (std::size_t i = 0; i < elems.size(); i++) {
    if (i) out += ", ";
    out += elems[i];
  }
  return out + "}";
}

OutcomeResult outcomes(const State& s, int fuel, bool abort_free,
                       std::size_t max_states) {
  State start = s;
  start.root = normalize_node(start.root);
  if (abort_free) start.root = strip_alternatives(start.root);
  start = canonicalize(std::move(start));

  OutcomeResult res;
  std::unordered_set<std::string> visited{start.key};
  std::deque<State> frontier{std::move(start)};

  for (int depth = 0; depth <= fuel && !frontier.empty(); depth++) {
    std::deque<State> next;
    for (State& st : frontier) {
      res.states_explored++;
      std::vector<Step> steps = enumerate_steps(st);
      if (abort_free)
        std::erase_if(steps, [](const Step& x) { return x.rule == "trabort"; });
      if (steps.empty()) {
        // With aborts disabled a state can wedge while transactions remain
        // open; such dead ends observably commit to nothing.
        if (!abort_free || transaction_free(st.root))
          res.outcomes.insert(outcome_of_terminal(st));
        continue;
      }
      if (depth == fuel) {
        res.truncated = true;
        continue;
      }
      for (Step& sp : steps) {
        State ns = std::move(sp.next);
        ns.root = normalize_node(ns.root);
        if (abort_free) ns.root = strip_alternatives(ns.root);
        ns = canonicalize(std::move(ns));
        if (visited.size() >= max_states) {
          res.truncated = true;
          break;
        }
        if (visited.insert(ns.key).second) next.push_back(std::move(ns));
      }
      if (res.truncated && visited.size() >= max_states) break;
    }
    frontier = std::move(next);
  }
  return res;
}

}  // namespace tcml::refsem
