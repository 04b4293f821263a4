#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "parcover/dataset.hpp"
#include "parcover/intervals.hpp"
#include "parcover/prover.hpp"
#include "parcover/termlink.hpp"
#include "parcover/transport.hpp"

namespace parcover {

inline constexpr std::uint32_t kResultTag = 20;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LearnerConfig {
  int max_clause_length = 3;
  std::int64_t noise = 0;
  std::int64_t min_pos = 2;
  int depth_limit = 64;
  std::int64_t small_odd_threshold = 100;
  std::chrono::microseconds cost_per_builtin_call{0};
};

/// A literal schema: predicate name plus one mode per argument. Input
/// arguments reuse variables already in the clause; output arguments get
/// fresh ones.
struct LiteralTemplate {
  std::string predicate;
  std::vector<bool> out_mode;  // false = input (+), true = output (-)
};

/// Builds the refinement pool: explicit mode/1 declarations when present
/// (in declaration order), otherwise every non-target background predicate
/// with all-input modes, in first-definition order.
std::vector<LiteralTemplate> pool_from_background(
    const Background& bg, std::span<const Term> mode_facts,
    const std::string& target_functor, std::size_t target_arity);

/// One child per pool literal not already in the body, in pool order.
std::vector<Clause> refine(const Clause& current,
                           std::span<const LiteralTemplate> pool);

/// Clause variables are named N, O, P, ... in order of introduction.
Clause unit_clause(const std::string& functor, std::size_t arity);

inline std::int64_t score(std::int64_t pos_count, std::int64_t neg_count) {
  return pos_count - neg_count;
}

struct AcceptedClause {
  Clause clause;
  std::int64_t pos_count;
  std::int64_t neg_count;
};
using Theory = std::vector<AcceptedClause>;

bool theories_equal(const Theory& a, const Theory& b);
std::string theory_hash(const Theory& t);
std::string theory_listing(const Theory& t);

struct EvalRecord {
  std::string clause;
  bool cache_hit;
  std::int64_t pos_count;
  std::int64_t neg_count;
};

struct InduceResult {
  Theory theory;
  std::vector<EvalRecord> log;
  std::uint64_t uncached_evaluations = 0;
  std::uint64_t cache_hits = 0;
};

// Protocol payloads ---------------------------------------------------------

struct ProveRequest {
  std::int64_t id;
  Clause clause;
  IntervalSet active_pos;
  IntervalSet active_neg;
};
struct ProveResult {
  std::int64_t id;
  int worker;
  Coverage coverage;
};

Term prove_request_to_term(const ProveRequest& req);
ProveRequest prove_request_from_term(const Term& t);
Term prove_result_to_term(const ProveResult& res);
ProveResult prove_result_from_term(const Term& t);

/// Setup broadcast: background(ListOfClauses). The receiver supplies its own
/// cost model from local configuration.
Term background_to_term(const Background& bg);
Background background_from_term(const Term& t, const LearnerConfig& cfg);

// Evaluation backends -------------------------------------------------------

/// Where candidate coverage comes from: the whole dataset in-process, or
/// the worker pool over the wire.
class CoverageSource {
 public:
  virtual ~CoverageSource() = default;
  virtual Coverage evaluate(const Clause& candidate, const IntervalSet& active_pos,
                            const IntervalSet& active_neg) = 0;
};

class LocalCoverage final : public CoverageSource {
 public:
  LocalCoverage(Prover& prover, std::span<const Example> pos,
                std::span<const Example> neg)
      : prover_(prover), pos_(pos), neg_(neg) {}
  Coverage evaluate(const Clause& candidate, const IntervalSet& active_pos,
                    const IntervalSet& active_neg) override;

 private:
  Prover& prover_;
  std::span<const Example> pos_;
  std::span<const Example> neg_;
};

/// Master side of the protocol: one prove-request broadcast per uncached
/// candidate, then exactly W sender-unspecified receives whose interval
/// sets are unioned in arrival order.
class ClusterCoverage final : public CoverageSource {
 public:
  explicit ClusterCoverage(Endpoint& master) : ep_(master) {}
  Coverage evaluate(const Clause& candidate, const IntervalSet& active_pos,
                    const IntervalSet& active_neg) override;
  std::int64_t requests_sent() const { return next_request_; }

 private:
  Endpoint& ep_;
  std::int64_t next_request_ = 0;
};

// Search --------------------------------------------------------------------

/// Sequential cover with greedy clause search, backed by a coverage cache
/// keyed on (clause text, active-set version). Any change to the active
/// pool bumps the version and so invalidates the cache.
class InduceEngine {
 public:
  InduceEngine(std::string target_functor, std::size_t target_arity,
               IntervalSet active_pos, IntervalSet active_neg,
               std::vector<LiteralTemplate> pool, LearnerConfig config,
               CoverageSource& source);

  InduceResult run();

  /// Cache-aware single evaluation against the current active sets.
  Coverage evaluate(const Clause& candidate);
  void note_active_change() { ++active_version_; }

  const IntervalSet& active_pos() const { return active_pos_; }
  const IntervalSet& active_neg() const { return active_neg_; }
  std::uint64_t active_version() const { return active_version_; }

 private:
  std::string target_functor_;
  std::size_t target_arity_;
  IntervalSet active_pos_;
  IntervalSet active_neg_;
  std::vector<LiteralTemplate> pool_;
  LearnerConfig cfg_;
  CoverageSource& source_;
  std::unordered_map<std::string, Coverage> cache_;
  std::uint64_t active_version_ = 0;
  Theory theory_;
  std::vector<EvalRecord> log_;
  std::uint64_t uncached_ = 0;
  std::uint64_t cache_hits_ = 0;
};

// Sessions ------------------------------------------------------------------

/// Worker loop: receive prove-request broadcasts, evaluate over the local
/// shard, send the result to rank 0; a shutdown broadcast finalizes and
/// returns.
void worker_loop(Endpoint& ep, const Shard& pos, const Shard& neg,
                 const Background& bg, const LearnerConfig& cfg);

struct SessionOutcome {
  Theory theory;
  std::vector<EvalRecord> log;
  std::uint64_t uncached_evaluations = 0;
  std::uint64_t cache_hits = 0;
  TransportCounters master_counters;
  std::uint64_t total_sends = 0;  // point-to-point messages, whole cluster
  double wall_ms = 0;
};

/// Master-side session: distribute shards, broadcast the background, run
/// the induction loop, broadcast shutdown, finalize.
SessionOutcome run_master_session(Endpoint& ep, const ExampleSet& examples,
                                  const Background& bg,
                                  std::span<const LiteralTemplate> pool,
                                  const LearnerConfig& cfg);

/// Worker-side session: receive shard and background, then worker_loop.
/// Returns this worker's transport counters.
TransportCounters run_worker_session(Endpoint& ep, const LearnerConfig& cfg);

/// Whole session on the in-process simulated cluster (workers on threads).
SessionOutcome run_simulated_session(const ExampleSet& examples, const Background& bg,
                                     std::span<const LiteralTemplate> pool, int workers,
                                     const LearnerConfig& cfg,
                                     std::uint64_t schedule_seed = 0);

/// Whole session over a loopback TCP mesh, one thread per rank.
SessionOutcome run_tcp_session(const ExampleSet& examples, const Background& bg,
                               std::span<const LiteralTemplate> pool, int workers,
                               const LearnerConfig& cfg);

/// Single-process reference: the same search over the unsharded dataset
/// with no transport.
InduceResult induce_reference(const ExampleSet& examples, const Background& bg,
                              std::span<const LiteralTemplate> pool,
                              const LearnerConfig& cfg);

}  // namespace parcover
