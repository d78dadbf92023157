#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcml/ast.hpp"
#include "tcml/runtime.hpp"
#include "tcml/sched.hpp"
#include "tcml/trace.hpp"

namespace tcml::bench {

// Which workload to generate. The two ideal variants are the coordination
// baselines: same communication pattern, no transactions at all.
enum class Benchmark { ThreeWR, Sno, ThreeWRIdeal, SnoIdeal };

// Accepts "3wr", "sno", "3wr-ideal", "sno-ideal". Throws
// std::invalid_argument otherwise.
Benchmark parse_benchmark(const std::string& name);
std::string benchmark_name(Benchmark b);

struct SnoCounts {
  int alice = 1;
  int bob = 1;
  int carol = 1;
  int david = 1;
  int total() const { return alice + bob + carol + david; }
};

struct BenchSpec {
  Benchmark benchmark = Benchmark::ThreeWR;
  int process_count = 3;  // 3wr family
  SnoCounts counts;       // sno family
  std::int64_t duration_millis = 0;
  rt::PolicyKind scheduler = rt::PolicyKind::CommDriven;
  std::uint64_t seed = 1;
  int repetitions = 1;
  // Deterministic runs measure a virtual window (1 virtual ms per scheduling
  // step); otherwise the window is wall time on real threads.
  bool deterministic = false;
  bool one_shot = false;
  rt::PolicyConfig policy_cfg;

  // Throws std::invalid_argument on out-of-range fields, including
  // duration_millis == 0.
  void validate() const;
};

struct RepetitionResult {
  std::int64_t ops = 0;
  double ops_per_sec = 0.0;
  rt::RtMetrics metrics;
};

struct ThroughputReport {
  std::string benchmark;
  std::string scheduler;
  std::int64_t window_millis = 0;
  int repetitions = 0;
  std::vector<RepetitionResult> reps;
  std::int64_t total_ops = 0;
  double mean_ops_per_sec = 0.0;
  // Directive counts summed over repetitions.
  std::int64_t embeds = 0;
  std::int64_t aborts = 0;
  std::int64_t commits = 0;
  std::int64_t stale_drops = 0;

  std::string to_json() const;
  std::string to_table() const;
};

// Source-level restarting-transaction macro: a recursive function that
// re-enters an identical transaction after every abort, applied to unit so
// the expression starts the first attempt immediately.
std::string expand_restart(const std::string& txn, const std::string& body,
                           const std::string& result_type = "unit");

// Program generators. All returned sources parse and typecheck; the
// transactional ones name every top-level workload transaction "op" so commit
// events can be attributed.
std::string source_3wr(int n, bool one_shot);
// Fixed roles instead of a coin flip, one char per process: 'l' leader,
// 'f' follower. Used by exhaustive-search cross-checks.
std::string source_3wr_forced(const std::string& roles);
std::string source_3wr_ideal(int n);
std::string source_sno(const SnoCounts& counts, bool one_shot);
std::string source_sno_ideal(const SnoCounts& counts);

std::string bench_source(const BenchSpec& spec);
// parse + typecheck of bench_source.
ExprPtr build_program(const BenchSpec& spec);

// Successful workload operations in a trace: commit events of transactions
// whose binder is `binder`, credited only once every enclosing transaction
// has itself committed to the top level. Work that a later enclosing abort
// discarded is not counted.
std::int64_t count_committed_ops(const std::vector<rt::TraceEvent>& events,
                                 const std::string& binder = "op");
// Ideal-baseline operations: sync events on the designated work channels.
// scale_num/scale_den convert syncs to per-participant operations.
std::int64_t count_ideal_ops(const std::vector<rt::TraceEvent>& events,
                             const std::vector<std::int64_t>& chans,
                             std::int64_t scale_num = 1,
                             std::int64_t scale_den = 1);
std::int64_t count_ops(Benchmark b, const std::vector<rt::TraceEvent>& events);

ThroughputReport run_bench(const BenchSpec& spec);

}  // namespace tcml::bench
