// Command line front end.
//
// Exit codes: 0 success, 1 program error (parse, type, runtime, failed
// trace check), 2 usage error (bad flags or an invalid benchmark spec).
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tcml/bench.hpp"
#include "tcml/errors.hpp"
#include "tcml/parser.hpp"
#include "tcml/refsem.hpp"
#include "tcml/runtime.hpp"
#include "tcml/trace_stats.hpp"
#include "tcml/typecheck.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tcml::Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tcml::Error("cannot write " + path);
  out << text;
}

tcml::ExprPtr load_program(const std::string& path) {
  tcml::ExprPtr e = tcml::parse_program(slurp(path));
  tcml::typecheck(e);
  return e;
}

tcml::rt::PolicyKind policy_of(const std::string& name) {
  auto k = tcml::rt::parse_policy(name);
  if (!k) throw std::invalid_argument("unknown scheduler: " + name);
  return *k;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typed channels with communicating transactions"};
  app.require_subcommand(1);

  // Shared scheduler knobs; bound to both `run` and `bench`.
  std::string sched = "s";
  std::uint64_t seed = 0;
  bool deterministic = false;
  double run_prob = 0.95;
  double abort_prob = 0.05;
  std::int64_t da_timeout_ms = 50;

  std::string check_file;
  CLI::App* check = app.add_subcommand("check", "parse and typecheck a program");
  check->add_option("file", check_file, "program file")->required();

  std::string run_file;
  std::string run_trace_path;
  std::int64_t run_max_ms = 2000;
  CLI::App* run = app.add_subcommand("run", "execute a program");
  run->add_option("file", run_file, "program file")->required();
  run->add_option("--scheduler", sched, "scheduling policy: r, s, cd or da");
  run->add_option("--seed", seed, "policy rng seed");
  run->add_option("--max-ms", run_max_ms,
                  "time budget; virtual milliseconds when deterministic");
  run->add_flag("--deterministic", deterministic,
                "single-threaded simulation with a virtual clock");
  run->add_option("--trace", run_trace_path, "write an ndjson trace here");
  run->add_option("--run-prob", run_prob, "staged keep-running weight");
  run->add_option("--abort-prob", abort_prob, "staged abort weight");
  run->add_option("--da-timeout-ms", da_timeout_ms,
                  "inactivity window before da allows an abort");

  std::string oracle_file;
  int oracle_fuel = 200;
  bool oracle_abort_free = false;
  std::size_t oracle_max_states = 1'000'000;
  CLI::App* oracle =
      app.add_subcommand("oracle", "enumerate all reachable outcomes");
  oracle->add_option("file", oracle_file, "program file")->required();
  oracle->add_option("--fuel", oracle_fuel, "search depth bound");
  oracle->add_flag("--abort-free", oracle_abort_free,
                   "disable the abort rule during the search");
  oracle->add_option("--max-states", oracle_max_states,
                     "cap on distinct explored states");

  std::string bench_name = "3wr";
  int bench_n = 3;
  tcml::bench::SnoCounts bench_counts;
  std::int64_t bench_duration = 0;
  int bench_reps = 1;
  std::string bench_json_path;
  bool bench_one_shot = false;
  bool bench_emit_source = false;
  CLI::App* bench = app.add_subcommand("bench", "run a throughput benchmark");
  bench->add_option("--benchmark", bench_name,
                    "3wr, sno, 3wr-ideal or sno-ideal");
  bench->add_option("-n,--procs", bench_n, "process count (3wr family)");
  bench->add_option("--alice", bench_counts.alice, "alice count (sno family)");
  bench->add_option("--bob", bench_counts.bob, "bob count (sno family)");
  bench->add_option("--carol", bench_counts.carol, "carol count (sno family)");
  bench->add_option("--david", bench_counts.david, "david count (sno family)");
  bench->add_option("--duration-ms", bench_duration,
                    "measurement window per repetition");
  bench->add_option("--reps", bench_reps, "repetitions");
  bench->add_option("--scheduler", sched, "scheduling policy: r, s, cd or da");
  bench->add_option("--seed", seed, "policy rng seed; repetition i adds i");
  bench->add_flag("--deterministic", deterministic,
                  "single-threaded simulation with a virtual clock");
  bench->add_option("--json", bench_json_path,
                    "write the report as JSON here ('-' for stdout)");
  bench->add_flag("--one-shot", bench_one_shot,
                  "single round per process instead of a loop");
  bench->add_flag("--emit-source", bench_emit_source,
                  "print the generated program instead of running it");
  bench->add_option("--run-prob", run_prob, "staged keep-running weight");
  bench->add_option("--abort-prob", abort_prob, "staged abort weight");
  bench->add_option("--da-timeout-ms", da_timeout_ms,
                    "inactivity window before da allows an abort");

  std::string stats_file;
  std::string stats_policy = "s";
  std::int64_t stats_da_timeout_ms = 50;
  bool stats_json = false;
  CLI::App* stats =
      app.add_subcommand("trace-stats", "verify policy invariants on a trace");
  stats->add_option("file", stats_file, "ndjson trace file")->required();
  stats->add_option("--policy", stats_policy,
                    "policy the trace was produced under: r, s, cd or da");
  stats->add_option("--da-timeout-ms", stats_da_timeout_ms,
                    "inactivity window the da run was configured with");
  stats->add_flag("--json", stats_json, "print the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (check->parsed()) {
      tcml::ExprPtr e = tcml::parse_program(slurp(check_file));
      tcml::TypePtr t = tcml::typecheck(e);
      std::printf("ok: %s\n", t->show().c_str());
      return 0;
    }

    if (run->parsed()) {
      tcml::ExprPtr e = load_program(run_file);
      tcml::rt::RunConfig cfg;
      cfg.policy = policy_of(sched);
      cfg.seed = seed;
      cfg.deterministic = deterministic;
      cfg.policy_cfg.run_prob = run_prob;
      cfg.policy_cfg.abort_prob = abort_prob;
      cfg.policy_cfg.da_timeout_nanos = da_timeout_ms * 1'000'000;
      if (deterministic)
        cfg.max_virtual_steps = run_max_ms;
      else
        cfg.max_wall_millis = run_max_ms;
      cfg.collect_trace = !run_trace_path.empty();
      tcml::rt::RunResult r = tcml::rt::run_program(e, cfg);
      if (!run_trace_path.empty()) spill(run_trace_path, r.trace_ndjson());
      if (!r.error.empty()) {
        std::fprintf(stderr, "error: %s\n", r.error.c_str());
        return 1;
      }
      if (r.quiescent)
        std::printf("outcome: %s\n", r.outcome.c_str());
      else
        std::printf("timed out after %lld ms\n",
                    static_cast<long long>(run_max_ms));
      std::printf(
          "commits=%lld aborts=%lld embeds=%lld syncs=%lld stale=%lld\n",
          static_cast<long long>(r.metrics.commits),
          static_cast<long long>(r.metrics.aborts),
          static_cast<long long>(r.metrics.embeds),
          static_cast<long long>(r.metrics.syncs),
          static_cast<long long>(r.metrics.stale_drops));
      return 0;
    }

    if (oracle->parsed()) {
      tcml::ExprPtr e = load_program(oracle_file);
      tcml::refsem::OutcomeResult res =
          tcml::refsem::outcomes(tcml::refsem::initial_state(e), oracle_fuel,
                                 oracle_abort_free, oracle_max_states);
      nlohmann::ordered_json j;
      j["outcomes"] = nlohmann::ordered_json::array();
      for (const std::string& o : res.outcomes) j["outcomes"].push_back(o);
      j["truncated"] = res.truncated;
      j["statesExplored"] = res.states_explored;
      std::printf("%s\n", j.dump().c_str());
      return 0;
    }

    if (bench->parsed()) {
      tcml::bench::BenchSpec spec;
      spec.benchmark = tcml::bench::parse_benchmark(bench_name);
      spec.process_count = bench_n;
      spec.counts = bench_counts;
      spec.duration_millis = bench_duration;
      spec.scheduler = policy_of(sched);
      spec.seed = seed;
      spec.repetitions = bench_reps;
      spec.deterministic = deterministic;
      spec.one_shot = bench_one_shot;
      spec.policy_cfg.run_prob = run_prob;
      spec.policy_cfg.abort_prob = abort_prob;
      spec.policy_cfg.da_timeout_nanos = da_timeout_ms * 1'000'000;
      if (bench_emit_source) {
        // Emitting a program needs no measurement window.
        if (spec.duration_millis <= 0) spec.duration_millis = 1;
        spec.validate();
        std::fputs(tcml::bench::bench_source(spec).c_str(), stdout);
        return 0;
      }
      spec.validate();
      tcml::bench::ThroughputReport rep = tcml::bench::run_bench(spec);
      if (bench_json_path == "-") {
        std::printf("%s\n", rep.to_json().c_str());
      } else {
        if (!bench_json_path.empty()) spill(bench_json_path, rep.to_json());
        std::fputs(rep.to_table().c_str(), stdout);
      }
      return 0;
    }

    if (stats->parsed()) {
      std::vector<tcml::rt::TraceEvent> events =
          tcml::rt::parse_ndjson(slurp(stats_file));
      tcml::rt::TraceCheckConfig cfg;
      cfg.policy = policy_of(stats_policy);
      cfg.da_timeout_nanos = stats_da_timeout_ms * 1'000'000;
      tcml::rt::TraceStats st = tcml::rt::check_trace(events, cfg);
      std::fputs((stats_json ? st.to_json() : st.to_table()).c_str(), stdout);
      return st.violations == 0 ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const tcml::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
