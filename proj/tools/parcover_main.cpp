#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parcover/bench.hpp"
#include "parcover/learner.hpp"

using namespace parcover;

namespace {

std::vector<int> parse_worker_list(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  if (out.empty()) throw CLI::ValidationError("--workers", "empty worker list");
  return out;
}

struct LearnArgs {
  std::string pos, neg, bg;
  int workers = 2;
  std::string backend = "simulated";
  std::string config;
  int rank = -1;
  LearnerConfig cfg;
  std::int64_t cost_us = 0;
  std::uint64_t seed = 0;
};

int run_learn(const LearnArgs& args) {
  LearnerConfig cfg = args.cfg;
  cfg.cost_per_builtin_call = std::chrono::microseconds(args.cost_us);

  ClusterConfig cluster;
  cluster.backend = args.backend == "tcp" ? BackendKind::Tcp : BackendKind::Simulated;
  if (!args.config.empty()) cluster = load_cluster_config(args.config);
  cluster.schedule_seed = cluster.schedule_seed ? cluster.schedule_seed : args.seed;

  if (cluster.backend == BackendKind::Tcp) {
    if (args.rank < 0) {
      std::cerr << "tcp backend requires --rank and a config with node lines\n";
      return 2;
    }
    auto ep = tcp_init(cluster.nodes, args.rank);
    if (args.rank == 0) {
      ExampleSet examples = load_examples(args.pos, args.neg);
      std::vector<Term> mode_facts;
      Background bg = load_background(args.bg, &mode_facts);
      bg.cost_per_builtin_call = cfg.cost_per_builtin_call;
      std::string tf = "target";
      std::size_t ta = 1;
      if (!examples.positives.empty()) {
        tf = examples.positives.front().goal.name();
        ta = examples.positives.front().goal.arity();
      }
      auto pool = pool_from_background(bg, mode_facts, tf, ta);
      SessionOutcome out = run_master_session(*ep, examples, bg, pool, cfg);
      std::cout << theory_listing(out.theory);
      std::cout << "% evaluations=" << out.uncached_evaluations
                << " cache_hits=" << out.cache_hits
                << " broadcast_rounds=" << out.master_counters.broadcast_rounds
                << "\n";
    } else {
      run_worker_session(*ep, cfg);
    }
    return 0;
  }

  ExampleSet examples = load_examples(args.pos, args.neg);
  std::vector<Term> mode_facts;
  Background bg = load_background(args.bg, &mode_facts);
  bg.cost_per_builtin_call = cfg.cost_per_builtin_call;
  std::string tf = "target";
  std::size_t ta = 1;
  if (!examples.positives.empty()) {
    tf = examples.positives.front().goal.name();
    ta = examples.positives.front().goal.arity();
  }
  auto pool = pool_from_background(bg, mode_facts, tf, ta);
  int workers = cluster.backend == BackendKind::Simulated && !args.config.empty()
                    ? cluster.size - 1
                    : args.workers;
  SessionOutcome out = run_simulated_session(examples, bg, pool, workers, cfg,
                                             cluster.schedule_seed);
  std::cout << theory_listing(out.theory);
  std::cout << "% workers=" << workers << " wall_ms=" << out.wall_ms
            << " evaluations=" << out.uncached_evaluations
            << " cache_hits=" << out.cache_hits
            << " broadcast_rounds=" << out.master_counters.broadcast_rounds
            << " p2p_messages=" << out.total_sends << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-parallel coverage-evaluation rule learner"};
  app.require_subcommand(1);

  // gen-odd
  auto* gen = app.add_subcommand("gen-odd", "generate the parity corpus");
  std::int64_t gen_n = 10000;
  std::string gen_out = "corpus";
  std::int64_t gen_threshold = 100;
  gen->add_option("--n", gen_n, "number of examples (even)")->required();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--small-odd-threshold", gen_threshold, "small_odd cutoff");

  // learn
  auto* learn = app.add_subcommand("learn", "run a learning session");
  LearnArgs largs;
  learn->add_option("--pos", largs.pos, "positive examples file");
  learn->add_option("--neg", largs.neg, "negative examples file");
  learn->add_option("--bg", largs.bg, "background file");
  learn->add_option("--workers", largs.workers, "worker count (simulated)");
  learn->add_option("--backend", largs.backend, "simulated|tcp");
  learn->add_option("--config", largs.config, "cluster config file");
  learn->add_option("--rank", largs.rank, "this node's rank (tcp)");
  learn->add_option("--max-clause-length", largs.cfg.max_clause_length);
  learn->add_option("--noise", largs.cfg.noise);
  learn->add_option("--min-pos", largs.cfg.min_pos);
  learn->add_option("--depth-limit", largs.cfg.depth_limit);
  learn->add_option("--cost-us", largs.cost_us, "busy-wait per builtin call");
  learn->add_option("--seed", largs.seed, "simulated scheduling seed");

  // bench
  auto* bench = app.add_subcommand("bench", "timing sweep over worker counts");
  std::string bench_corpus = "corpus";
  std::string bench_workers = "1,2,4";
  std::string bench_backend = "simulated";
  std::int64_t bench_cost = 0;
  int bench_repeats = 3;
  std::string bench_csv;
  bench->add_option("--corpus", bench_corpus, "corpus directory")->required();
  bench->add_option("--workers", bench_workers, "comma-separated worker counts");
  bench->add_option("--cost-us", bench_cost, "busy-wait per builtin call");
  bench->add_option("--repeats", bench_repeats, "repeats per cell");
  bench->add_option("--csv-out", bench_csv, "write rows to this file");
  bench->add_option("--backend", bench_backend, "simulated|tcp");

  // report
  auto* report = app.add_subcommand("report", "speedup table from a bench csv");
  std::string report_csv;
  report->add_option("--csv", report_csv, "bench csv file")->required();

  // term-roundtrip
  auto* roundtrip = app.add_subcommand("term-roundtrip", "parse/print debug utility");
  std::string rt_term;
  roundtrip->add_option("--term", rt_term, "term text (stdin when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      CorpusPaths paths = generate_odd_corpus(gen_n, gen_out, gen_threshold);
      std::cout << "wrote " << paths.pos.string() << ", " << paths.neg.string()
                << ", " << paths.bg.string() << "\n";
      return 0;
    }
    if (learn->parsed()) return run_learn(largs);
    if (bench->parsed()) {
      CorpusPaths corpus{std::filesystem::path(bench_corpus) / "pos.pl",
                         std::filesystem::path(bench_corpus) / "neg.pl",
                         std::filesystem::path(bench_corpus) / "bg.pl"};
      auto rows = run_experiment(corpus, bench_backend,
                                 parse_worker_list(bench_workers), bench_cost,
                                 bench_repeats);
      if (bench_csv.empty()) {
        write_csv(rows, std::cout);
      } else {
        std::ofstream out(bench_csv);
        if (!out) throw std::runtime_error("cannot write " + bench_csv);
        write_csv(rows, out);
        std::cout << "wrote " << bench_csv << "\n";
      }
      std::cout << report_speedup(rows);
      return 0;
    }
    if (report->parsed()) {
      std::ifstream in(report_csv);
      if (!in) throw std::runtime_error("cannot open " + report_csv);
      std::cout << report_speedup(read_csv(in));
      return 0;
    }
    if (roundtrip->parsed()) {
      std::string text = rt_term;
      if (text.empty()) {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        text = ss.str();
      }
      Term t = parse_term(text);
      std::string printed = print_term(t);
      std::cout << printed << "\n";
      bool ok = parse_term(printed) == t;
      std::cout << (ok ? "roundtrip ok" : "ROUNDTRIP MISMATCH") << "\n";
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
