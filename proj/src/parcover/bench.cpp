#include "parcover/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace parcover {

CorpusPaths generate_odd_corpus(std::int64_t n, const std::filesystem::path& out_dir,
                                std::int64_t small_odd_threshold) {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("corpus size must be even and >= 2");
  std::filesystem::create_directories(out_dir);
  CorpusPaths paths{out_dir / "pos.pl", out_dir / "neg.pl", out_dir / "bg.pl"};

  std::ofstream pos(paths.pos);
  std::ofstream neg(paths.neg);
  if (!pos || !neg) throw std::runtime_error("cannot write corpus files");
  for (std::int64_t k = 1; k <= n; ++k)
    (k % 2 == 1 ? pos : neg) << "target(" << k << ").\n";

  std::ofstream bg(paths.bg);
  if (!bg) throw std::runtime_error("cannot write background file");
  bg << "% parity task background\n";
  bg << "mode(small_odd(+)).\n";
  bg << "mode(odd(+)).\n";
  bg << "small_odd(N) :- odd(N), '<'(N," << small_odd_threshold << ").\n";
  bg << "odd(N) :- is(M,mod(N,2)), '=:='(M,1).\n";
  if (!pos.good() || !neg.good() || !bg.good())
    throw std::runtime_error("short write while generating corpus");
  return paths;
}

namespace {

double mean_of(const std::vector<double>& xs) {
  double sum = 0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double acc = 0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

std::vector<BenchRow> run_experiment(const CorpusPaths& corpus,
                                     const std::string& backend,
                                     const std::vector<int>& worker_counts,
                                     std::int64_t cost_us, int repeats,
                                     std::uint64_t schedule_seed) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (backend != "simulated" && backend != "tcp")
    throw std::invalid_argument("backend must be simulated or tcp");

  ExampleSet examples = load_examples(corpus.pos, corpus.neg);
  std::vector<Term> mode_facts;
  Background bg = load_background(corpus.bg, &mode_facts);

  LearnerConfig cfg;
  cfg.cost_per_builtin_call = std::chrono::microseconds(cost_us);
  bg.cost_per_builtin_call = cfg.cost_per_builtin_call;

  std::string target_functor = "target";
  std::size_t target_arity = 1;
  if (!examples.positives.empty()) {
    target_functor = examples.positives.front().goal.name();
    target_arity = examples.positives.front().goal.arity();
  }
  std::vector<LiteralTemplate> pool =
      pool_from_background(bg, mode_facts, target_functor, target_arity);

  std::vector<BenchRow> rows;
  for (int workers : worker_counts) {
    std::vector<double> walls;
    for (int rep = 0; rep < repeats; ++rep) {
      BenchRow row;
      row.backend = backend;
      row.workers = workers;
      row.cost_us = cost_us;
      row.repeat = std::to_string(rep);
      try {
        SessionOutcome outcome =
            backend == "tcp"
                ? run_tcp_session(examples, bg, pool, workers, cfg)
                : run_simulated_session(examples, bg, pool, workers, cfg,
                                        schedule_seed);
        row.wall_ms = outcome.wall_ms;
        row.broadcasts = outcome.master_counters.broadcast_rounds;
        row.p2p_messages = outcome.total_sends;
        row.theory_hash = theory_hash(outcome.theory);
        row.status = "ok";
        walls.push_back(outcome.wall_ms);
      } catch (const std::exception& e) {
        row.status = sanitize(std::string("error: ") + e.what());
      }
      rows.push_back(std::move(row));
    }
    BenchRow mean_row{backend, workers, cost_us, "mean", mean_of(walls), 0, 0, "", "summary"};
    BenchRow sd_row{backend, workers, cost_us, "stddev", stddev_of(walls), 0, 0, "", "summary"};
    rows.push_back(std::move(mean_row));
    rows.push_back(std::move(sd_row));
  }
  return rows;
}

static const char* kCsvHeader =
    "backend,workers,cost_us,repeat,wall_ms,broadcasts,p2p_messages,theory_hash,status";

void write_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << kCsvHeader << "\n";
  for (const BenchRow& r : rows) {
    out << r.backend << ',' << r.workers << ',' << r.cost_us << ',' << r.repeat << ','
        << std::setprecision(6) << std::fixed << r.wall_ms << ',' << r.broadcasts
        << ',' << r.p2p_messages << ',' << r.theory_hash << ',' << r.status << "\n";
  }
}

std::vector<BenchRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedCsv("empty csv");
  if (line != kCsvHeader) throw MalformedCsv("unexpected csv header: " + line);
  std::vector<BenchRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 9)
      throw MalformedCsv("line " + std::to_string(lineno) + ": expected 9 fields");
    BenchRow r;
    try {
      r.backend = fields[0];
      r.workers = std::stoi(fields[1]);
      r.cost_us = std::stoll(fields[2]);
      r.repeat = fields[3];
      r.wall_ms = std::stod(fields[4]);
      r.broadcasts = std::stoull(fields[5]);
      r.p2p_messages = std::stoull(fields[6]);
      r.theory_hash = fields[7];
      r.status = fields[8];
    } catch (const std::exception&) {
      throw MalformedCsv("line " + std::to_string(lineno) + ": bad field value");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string report_speedup(const std::vector<BenchRow>& rows) {
  // (backend, cost) -> W -> wall times
  std::map<std::pair<std::string, std::int64_t>, std::map<int, std::vector<double>>>
      groups;
  for (const BenchRow& r : rows) {
    if (r.status != "ok") continue;
    groups[{r.backend, r.cost_us}][r.workers].push_back(r.wall_ms);
  }
  std::ostringstream out;
  out << "backend      cost_us  workers  runs  mean_ms      speedup  efficiency\n";
  for (const auto& [key, by_workers] : groups) {
    double baseline = -1;
    auto w1 = by_workers.find(1);
    if (w1 != by_workers.end()) baseline = mean_of(w1->second);
    for (const auto& [workers, walls] : by_workers) {
      double mean = mean_of(walls);
      out << std::left << std::setw(13) << key.first << std::setw(9) << key.second
          << std::setw(9) << workers << std::setw(6) << walls.size() << std::setw(13)
          << std::fixed << std::setprecision(2) << mean;
      if (baseline > 0 && mean > 0) {
        double speedup = baseline / mean;
        out << std::setw(9) << std::setprecision(3) << speedup << std::setprecision(3)
            << speedup / workers;
      } else {
        out << std::setw(9) << "n/a" << "n/a";
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace parcover
