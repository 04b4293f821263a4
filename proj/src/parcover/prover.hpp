#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "parcover/dataset.hpp"
#include "parcover/intervals.hpp"
#include "parcover/term.hpp"

namespace parcover {

/// A definite clause: head plus an ordered body (empty for facts).
struct Clause {
  Term head;
  std::vector<Term> body;
};

/// On the wire and in logs a clause is always (Head:-Body), with Body a
/// ','-chain or the atom true.
Term clause_to_term(const Clause& c);
Clause clause_from_term(const Term& t);
std::string clause_text(const Clause& c);

/// Horn-clause background plus the fixed builtin set (is, =:=, <, >, =<, >=,
/// ==; mod inside arithmetic). A nonzero cost_per_builtin_call busy-waits
/// that long on every builtin invocation, emulating heavy background.
struct Background {
  std::vector<Clause> clauses;
  std::chrono::microseconds cost_per_builtin_call{0};
};

/// Reads a background file (canonical term syntax, ':-' and ',' infix).
/// mode/1 facts are split out rather than asserted; the learner turns them
/// into its refinement pool.
Background load_background(const std::filesystem::path& path,
                           std::vector<Term>* mode_facts = nullptr);

struct ProofStats {
  std::uint64_t depth_exceeded = 0;
  std::uint64_t builtin_calls = 0;
};

struct Coverage {
  IntervalSet pos;
  IntervalSet neg;
  std::int64_t pos_count() const { return pos.count(); }
  std::int64_t neg_count() const { return neg.count(); }
  friend bool operator==(const Coverage&, const Coverage&) = default;
};

/// Variable bindings with an undo trail, so backtracking restores state.
class Bindings {
 public:
  const Term* lookup(const std::string& var) const;
  void bind(std::string var, Term value);
  std::size_t mark() const { return trail_.size(); }
  void undo_to(std::size_t mark);
  /// Follows variable chains; returns the final unbound var or non-var term.
  const Term& deref(const Term& t) const;

 private:
  std::unordered_map<std::string, Term> map_;
  std::vector<std::string> trail_;
};

/// Most general unifier extending the current bindings; occurs-check on.
/// Returns false (and leaves an arbitrary partial trail; callers undo to
/// their own mark) when no unifier exists.
bool unify(const Term& a, const Term& b, Bindings& bindings);

/// SLD resolution over the background for one candidate clause at a time.
/// Deterministic; DepthExceeded is a counted proof failure, not an error.
class Prover {
 public:
  explicit Prover(Background background, int depth_limit = 64);

  /// True iff the ground goal unifies with the candidate head and the body
  /// is provable from the background within the depth limit.
  bool prove(const Term& goal, const Clause& candidate);

  /// Coverage over the given examples restricted to the active sets.
  Coverage evaluate_local(const Clause& candidate, std::span<const Example> pos,
                          std::span<const Example> neg,
                          const IntervalSet& active_pos,
                          const IntervalSet& active_neg);
  Coverage evaluate_local(const Clause& candidate, const Shard& pos,
                          const Shard& neg, const IntervalSet& active_pos,
                          const IntervalSet& active_neg);

  const ProofStats& stats() const { return stats_; }
  const Background& background() const { return bg_; }

 private:
  struct Engine;
  Background bg_;
  int depth_limit_;
  std::unordered_map<std::string, std::vector<const Clause*>> index_;
  std::uint64_t rename_serial_ = 0;
  ProofStats stats_;
};

}  // namespace parcover
