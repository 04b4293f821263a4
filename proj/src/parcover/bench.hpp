#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "parcover/learner.hpp"

namespace parcover {

class MalformedCsv : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusPaths {
  std::filesystem::path pos;
  std::filesystem::path neg;
  std::filesystem::path bg;
};

/// Parity task at size n (even): positives target(k) for odd k in [1,n],
/// negatives for even k, plus a background defining odd/1 and small_odd/1
/// (threshold configurable) with their mode declarations.
CorpusPaths generate_odd_corpus(std::int64_t n, const std::filesystem::path& out_dir,
                                std::int64_t small_odd_threshold = 100);

struct BenchRow {
  std::string backend;
  int workers = 0;
  std::int64_t cost_us = 0;
  std::string repeat;  // 0-based index, or "mean"/"stddev" on summary rows
  double wall_ms = 0;
  std::uint64_t broadcasts = 0;
  std::uint64_t p2p_messages = 0;
  std::string theory_hash;
  std::string status;  // "ok", "summary", or an error note
};

/// Runs induce end-to-end for every (worker count, repeat) cell and records
/// timing plus message counts; two summary rows (mean, stddev of wall_ms)
/// follow each cell's data rows. A failed run yields a row with a non-ok
/// status instead of aborting the sweep.
std::vector<BenchRow> run_experiment(const CorpusPaths& corpus,
                                     const std::string& backend,
                                     const std::vector<int>& worker_counts,
                                     std::int64_t cost_us, int repeats,
                                     std::uint64_t schedule_seed = 0);

void write_csv(const std::vector<BenchRow>& rows, std::ostream& out);
std::vector<BenchRow> read_csv(std::istream& in);

/// Per (backend, cost, W): mean wall time, speedup vs the W=1 mean, and
/// parallel efficiency. Summary and non-ok rows are ignored; statistics are
/// recomputed from the data rows.
std::string report_speedup(const std::vector<BenchRow>& rows);

}  // namespace parcover
