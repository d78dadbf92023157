#include "tcml/bench.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tcml/parser.hpp"
#include "tcml/typecheck.hpp"
#include "trace_replay.hpp"

namespace tcml::bench {

Benchmark parse_benchmark(const std::string& name) {
  if (name == "3wr") return Benchmark::ThreeWR;
  if (name == "sno") return Benchmark::Sno;
  if (name == "3wr-ideal") return Benchmark::ThreeWRIdeal;
  if (name == "sno-ideal") return Benchmark::SnoIdeal;
  throw std::invalid_argument("unknown benchmark: " + name);
}

std::string benchmark_name(Benchmark b) {
  switch (b) {
    case Benchmark::ThreeWR: return "3wr";
    case Benchmark::Sno: return "sno";
    case Benchmark::ThreeWRIdeal: return "3wr-ideal";
    case Benchmark::SnoIdeal: return "sno-ideal";
  }
  return "?";
}

void BenchSpec::validate() const {
  if (duration_millis <= 0)
    throw std::invalid_argument("duration must be positive");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (benchmark == Benchmark::ThreeWR || benchmark == Benchmark::ThreeWRIdeal) {
    if (process_count < 3)
      throw std::invalid_argument("3wr needs at least 3 processes");
  } else {
    if (counts.alice < 0 || counts.bob < 0 || counts.carol < 0 ||
        counts.david < 0 || counts.total() == 0)
      throw std::invalid_argument("sno needs nonnegative, not all zero counts");
  }
}

std::string expand_restart(const std::string& txn, const std::string& body,
                           const std::string& result_type) {
  return "(fun restart(): " + result_type + " -> atomic " + txn + " { " +
         body + " } else { restart () }) ()";
}

namespace {

// Shared 3WR pieces. The rendezvous channel carries (value, reply channel)
// requests; the leader answers each request with the other follower's value.
const char* k3wrHeader =
    "let rv = newchan[int * (int chan)] in\n"
    "let lead = (fun lead(): int ->\n"
    "  let a = recv rv in\n"
    "  let b = recv rv in\n"
    "  send (snd a) (fst b);\n"
    "  send (snd b) (fst a);\n"
    "  (fst a) + (fst b)) in\n"
    "let follow = (fun follow(me: int): int ->\n"
    "  let reply = newchan[int] in\n"
    "  send rv (me, reply);\n"
    "  recv reply) in\n";

std::string spawn_line(const std::string& body) {
  return "let _ = spawn (" + body + ") in\n";
}

}  // namespace

std::string source_3wr(int n, bool one_shot) {
  std::ostringstream out;
  out << k3wrHeader;
  if (one_shot) {
    out << "let proc = (fun proc(me: int): int ->\n"
        << "  "
        << expand_restart(
               "op",
               "let v = if flip () then lead () else follow me in commit op; v",
               "int")
        << ") in\n";
  } else {
    out << "let once = (fun once(me: int): unit ->\n"
        << "  "
        << expand_restart(
               "op", "(if flip () then lead () else follow me); commit op")
        << ") in\n"
        << "let proc = (fun proc(me: int): unit -> once me; proc me) in\n";
  }
  for (int i = 1; i <= n; ++i)
    out << spawn_line("fun t(): " + std::string(one_shot ? "int" : "unit") +
                      " -> proc " + std::to_string(i));
  out << "()\n";
  return out.str();
}

std::string source_3wr_forced(const std::string& roles) {
  std::ostringstream out;
  out << k3wrHeader;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    std::string call = roles[i] == 'l'
                           ? std::string("lead ()")
                           : "follow " + std::to_string(i + 1);
    out << spawn_line(
        "fun t(): int -> " +
        expand_restart("op", "let v = " + call + " in commit op; v", "int"));
  }
  out << "()\n";
  return out.str();
}

std::string source_3wr_ideal(int n) {
  std::ostringstream out;
  // The matcher plays permanent coordinator: it collects three requests and
  // rotates the values back, so no process ever needs to speculate.
  out << "let rv = newchan[int * (int chan)] in\n"
      << "let worker = (fun worker(me: int): unit ->\n"
      << "  let reply = newchan[int] in\n"
      << "  send rv (me, reply);\n"
      << "  recv reply;\n"
      << "  worker me) in\n"
      << "let matcher = (fun matcher(): unit ->\n"
      << "  let a = recv rv in\n"
      << "  let b = recv rv in\n"
      << "  let c = recv rv in\n"
      << "  send (snd a) (fst b);\n"
      << "  send (snd b) (fst c);\n"
      << "  send (snd c) (fst a);\n"
      << "  matcher ()) in\n"
      << spawn_line("matcher");
  for (int i = 1; i <= n; ++i)
    out << spawn_line("fun t(): unit -> worker " + std::to_string(i));
  out << "()\n";
  return out.str();
}

namespace {

struct SnoRole {
  const char* name;
  const char* body;  // transactional body before the commit
  int tag;           // one-shot finish value, distinguishes roles in outcomes
};

constexpr SnoRole kSnoRoles[] = {
    {"alice", "sync dinner; sync movie", 1},
    {"bob", "sync dinner; sync dancing", 2},
    {"carol", "sync dancing", 3},
    {"david", "sync dancing; sync movie", 4},
};

int sno_count(const SnoCounts& c, int i) {
  switch (i) {
    case 0: return c.alice;
    case 1: return c.bob;
    case 2: return c.carol;
    default: return c.david;
  }
}

const char* kSnoHeader =
    "let dinner = newchan[unit] in\n"
    "let dancing = newchan[unit] in\n"
    "let movie = newchan[unit] in\n";

}  // namespace

std::string source_sno(const SnoCounts& counts, bool one_shot) {
  std::ostringstream out;
  out << kSnoHeader
      << "let sync = (fun sync(c: unit chan): unit ->\n"
      << "  if flip () then send c () else recv c) in\n";
  for (int i = 0; i < 4; ++i) {
    const SnoRole& r = kSnoRoles[i];
    if (one_shot) {
      out << "let " << r.name << " = (fun " << r.name << "(): int ->\n  "
          << expand_restart("op",
                            std::string(r.body) + "; commit op; " +
                                std::to_string(r.tag),
                            "int")
          << ") in\n";
    } else {
      out << "let " << r.name << "1 = (fun once(): unit ->\n  "
          << expand_restart("op", std::string(r.body) + "; commit op")
          << ") in\n"
          << "let " << r.name << " = (fun " << r.name << "(): unit -> "
          << r.name << "1 (); " << r.name << " ()) in\n";
    }
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < sno_count(counts, i); ++j)
      out << spawn_line(kSnoRoles[i].name);
  out << "()\n";
  return out.str();
}

std::string source_sno_ideal(const SnoCounts& counts) {
  std::ostringstream out;
  // Fixed communication directions form a cycle alice -> bob -> david ->
  // alice, so the program needs no speculation and cannot deadlock. Carol
  // processes are omitted entirely.
  out << kSnoHeader
      << "let alice = (fun alice(): unit -> "
         "send dinner (); recv movie; alice ()) in\n"
      << "let bob = (fun bob(): unit -> "
         "recv dinner; send dancing (); bob ()) in\n"
      << "let david = (fun david(): unit -> "
         "recv dancing; send movie (); david ()) in\n";
  for (int i = 0; i < 4; ++i) {
    if (i == 2) continue;
    for (int j = 0; j < sno_count(counts, i); ++j)
      out << spawn_line(kSnoRoles[i].name);
  }
  out << "()\n";
  return out.str();
}

std::string bench_source(const BenchSpec& spec) {
  switch (spec.benchmark) {
    case Benchmark::ThreeWR:
      return source_3wr(spec.process_count, spec.one_shot);
    case Benchmark::ThreeWRIdeal: return source_3wr_ideal(spec.process_count);
    case Benchmark::Sno: return source_sno(spec.counts, spec.one_shot);
    case Benchmark::SnoIdeal: return source_sno_ideal(spec.counts);
  }
  throw std::invalid_argument("unknown benchmark");
}

ExprPtr build_program(const BenchSpec& spec) {
  ExprPtr e = parse_program(bench_source(spec));
  typecheck(e);
  return e;
}

std::int64_t count_committed_ops(const std::vector<rt::TraceEvent>& events,
                                 const std::string& binder) {
  rt::TraceTree tree(binder);
  for (const auto& ev : events) tree.apply(ev);
  return tree.total_ops();
}

std::int64_t count_ideal_ops(const std::vector<rt::TraceEvent>& events,
                             const std::vector<std::int64_t>& chans,
                             std::int64_t scale_num, std::int64_t scale_den) {
  std::set<std::string> keys;
  for (std::int64_t c : chans) keys.insert(std::to_string(c));
  std::int64_t syncs = 0;
  for (const auto& ev : events)
    if (ev.kind == "sync" && keys.count(ev.get("chan"))) ++syncs;
  return syncs * scale_num / scale_den;
}

std::int64_t count_ops(Benchmark b, const std::vector<rt::TraceEvent>& events) {
  switch (b) {
    case Benchmark::ThreeWR:
    case Benchmark::Sno: return count_committed_ops(events, "op");
    case Benchmark::ThreeWRIdeal:
      // Three participant ops per round of two rendezvous syncs.
      return count_ideal_ops(events, {0}, 3, 2);
    case Benchmark::SnoIdeal:
      // One sync on each of dinner/dancing/movie per full round of three
      // participant ops.
      return count_ideal_ops(events, {0, 1, 2}, 1, 1);
  }
  return 0;
}

ThroughputReport run_bench(const BenchSpec& spec) {
  spec.validate();
  ExprPtr prog = build_program(spec);

  ThroughputReport rep;
  rep.benchmark = benchmark_name(spec.benchmark);
  rep.scheduler = rt::policy_name(spec.scheduler);
  rep.window_millis = spec.duration_millis;
  rep.repetitions = spec.repetitions;

  for (int i = 0; i < spec.repetitions; ++i) {
    rt::RunConfig rc;
    rc.policy = spec.scheduler;
    rc.seed = spec.seed + static_cast<std::uint64_t>(i);
    rc.policy_cfg = spec.policy_cfg;
    rc.deterministic = spec.deterministic;
    rc.collect_trace = true;
    if (spec.deterministic) {
      // One scheduling step is one virtual millisecond.
      rc.max_virtual_steps = spec.duration_millis;
    } else {
      rc.max_wall_millis = spec.duration_millis;
    }
    rt::RunResult r = rt::run_program(prog, rc);

    RepetitionResult rr;
    rr.ops = count_ops(spec.benchmark, r.events);
    rr.ops_per_sec = double(rr.ops) * 1000.0 / double(spec.duration_millis);
    rr.metrics = r.metrics;
    rep.total_ops += rr.ops;
    rep.embeds += r.metrics.embeds;
    rep.aborts += r.metrics.aborts;
    rep.commits += r.metrics.commits;
    rep.stale_drops += r.metrics.stale_drops;
    rep.reps.push_back(std::move(rr));
  }
  double sum = 0;
  for (const auto& rr : rep.reps) sum += rr.ops_per_sec;
  rep.mean_ops_per_sec = rep.reps.empty() ? 0.0 : sum / double(rep.reps.size());
  return rep;
}

std::string ThroughputReport::to_json() const {
  nlohmann::ordered_json j;
  j["benchmark"] = benchmark;
  j["scheduler"] = scheduler;
  j["windowMillis"] = window_millis;
  j["repetitions"] = repetitions;
  j["totalOps"] = total_ops;
  j["meanOpsPerSec"] = mean_ops_per_sec;
  j["directives"] = {{"embeds", embeds},
                     {"aborts", aborts},
                     {"commits", commits},
                     {"staleDrops", stale_drops}};
  nlohmann::ordered_json reps_j = nlohmann::ordered_json::array();
  for (const auto& rr : reps)
    reps_j.push_back({{"ops", rr.ops}, {"opsPerSec", rr.ops_per_sec}});
  j["reps"] = std::move(reps_j);
  return j.dump(2);
}

std::string ThroughputReport::to_table() const {
  std::ostringstream out;
  out << "benchmark " << benchmark << "  scheduler " << scheduler
      << "  window " << window_millis << " ms  reps " << repetitions << "\n";
  out << "ops " << total_ops << "  mean " << mean_ops_per_sec << " ops/s\n";
  out << "directives: embeds " << embeds << "  aborts " << aborts
      << "  commits " << commits << "  stale " << stale_drops << "\n";
  for (std::size_t i = 0; i < reps.size(); ++i)
    out << "  rep " << (i + 1) << ": " << reps[i].ops << " ops  "
        << reps[i].ops_per_sec << " ops/s\n";
  return out.str();
}

}  // namespace tcml::bench
