#pragma once

// Shared test fixtures: seeded generators and independent models that the
// implementation is checked against.

#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "parcover/dataset.hpp"
#include "parcover/intervals.hpp"
#include "parcover/learner.hpp"
#include "parcover/prover.hpp"
#include "parcover/term.hpp"
#include "parcover/transport.hpp"

namespace testsupport {

using namespace parcover;

// ---------------------------------------------------------------------------
// Random terms

struct TermGen {
  std::mt19937_64 rng;

  explicit TermGen(std::uint64_t seed) : rng(seed) {}

  std::int64_t pick(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  }

  std::string atom_name() {
    static const char* pool[] = {
        "a",        "foo",   "bar_9",   "x",          "Hello World", "it's",
        "",         "[]",    ".",       ":-",         ",",           "odd",
        "with space", "'",   "a%b",     "Mixed Case", "tab\there",   "q1_w",
    };
    return pool[pick(0, std::size(pool) - 1)];
  }

  std::string var_name() {
    static const char* pool[] = {"X", "Y", "Zed", "_", "_G1", "Var9", "N"};
    return pool[pick(0, std::size(pool) - 1)];
  }

  std::string functor_name() {
    static const char* pool[] = {"f", "g", "msg", "'quoted'", "r", ",", ":-", ".",
                                 "[]", "mixed Case"};
    return pool[pick(0, std::size(pool) - 1)];
  }

  double random_double() {
    switch (pick(0, 4)) {
      case 0: return 0.0;
      case 1: return -0.0;
      case 2: return static_cast<double>(pick(-1000, 1000)) / 8.0;
      case 3: return 1e30 * static_cast<double>(pick(1, 9));
      default:
        return std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
    }
  }

  Term gen(int max_depth) {
    int kind = static_cast<int>(pick(0, max_depth <= 0 ? 3 : 5));
    switch (kind) {
      case 0: return Term::atom(atom_name());
      case 1: return Term::integer(pick(-1'000'000, 1'000'000));
      case 2: return Term::real(random_double());
      case 3: return Term::var(var_name());
      case 4: {  // compound
        int arity = static_cast<int>(pick(1, 3));
        std::vector<Term> args;
        for (int i = 0; i < arity; ++i) args.push_back(gen(max_depth - 1));
        return Term::compound(functor_name(), std::move(args));
      }
      default: {  // list, sometimes with a non-nil tail
        int len = static_cast<int>(pick(0, 4));
        std::vector<Term> items;
        for (int i = 0; i < len; ++i) items.push_back(gen(max_depth - 1));
        if (items.empty()) return Term::nil();
        Term tail = pick(0, 3) == 0 ? gen(0) : Term::nil();
        return Term::list(std::move(items), std::move(tail));
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Interval sets vs a plain set-of-ids model

struct IdSetModel {
  std::set<std::int64_t> ids;

  static IdSetModel of(const IntervalSet& s) {
    IdSetModel m;
    s.for_each([&](std::int64_t id) { m.ids.insert(id); });
    return m;
  }

  static IdSetModel random(std::mt19937_64& rng, std::int64_t universe, int max_count) {
    IdSetModel m;
    std::uniform_int_distribution<std::int64_t> id_dist(0, universe - 1);
    std::uniform_int_distribution<int> n_dist(0, max_count);
    int n = n_dist(rng);
    for (int i = 0; i < n; ++i) m.ids.insert(id_dist(rng));
    return m;
  }

  IntervalSet to_intervals() const {
    std::vector<std::int64_t> v(ids.begin(), ids.end());
    return IntervalSet::from_ids(v);
  }

  IdSetModel unioned(const IdSetModel& o) const {
    IdSetModel r = *this;
    r.ids.insert(o.ids.begin(), o.ids.end());
    return r;
  }
  IdSetModel subtracted(const IdSetModel& o) const {
    IdSetModel r;
    for (auto id : ids)
      if (!o.ids.count(id)) r.ids.insert(id);
    return r;
  }
  IdSetModel intersected(const IdSetModel& o) const {
    IdSetModel r;
    for (auto id : ids)
      if (o.ids.count(id)) r.ids.insert(id);
    return r;
  }

  bool matches(const IntervalSet& s) const {
    if (!s.is_normalized()) return false;
    if (s.count() != static_cast<std::int64_t>(ids.size())) return false;
    return IdSetModel::of(s).ids == ids;
  }
};

// ---------------------------------------------------------------------------
// Random learning tasks: a target/1 over small integers with fact-defined
// background predicates

struct RandomTask {
  ExampleSet examples;
  Background background;
  std::vector<LiteralTemplate> pool;
};

inline RandomTask random_task(std::uint64_t seed, int max_examples = 300) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };

  RandomTask task;
  std::int64_t universe = pick(20, 60);
  int n_preds = static_cast<int>(pick(2, 4));

  // fact-defined unary background predicates over the constant universe
  std::vector<std::set<std::int64_t>> extents(n_preds);
  for (int p = 0; p < n_preds; ++p) {
    std::string name = "p" + std::to_string(p);
    for (std::int64_t v = 0; v < universe; ++v) {
      if (pick(0, 99) < 45) {
        extents[p].insert(v);
        Clause fact;
        std::vector<Term> args;
        args.push_back(Term::integer(v));
        fact.head = Term::compound(name, std::move(args));
        task.background.clauses.push_back(std::move(fact));
      }
    }
    task.pool.push_back({name, {false}});
  }

  // label by a hidden rule (conjunction of up to two predicates) plus noise
  int a = static_cast<int>(pick(0, n_preds - 1));
  int b = static_cast<int>(pick(0, n_preds - 1));
  bool use_two = pick(0, 1) == 1;
  int n_examples = static_cast<int>(pick(30, max_examples));
  std::int64_t next_pos = 0, next_neg = 0;
  for (int i = 0; i < n_examples; ++i) {
    std::int64_t v = pick(0, universe - 1);
    bool label = extents[a].count(v) && (!use_two || extents[b].count(v));
    if (pick(0, 99) < 10) label = !label;  // noise keeps some seeds uncoverable
    std::vector<Term> args;
    args.push_back(Term::integer(v));
    Term goal = Term::compound("target", std::move(args));
    if (label)
      task.examples.positives.push_back(
          {next_pos++, Polarity::Positive, std::move(goal)});
    else
      task.examples.negatives.push_back(
          {next_neg++, Polarity::Negative, std::move(goal)});
  }
  return task;
}

// ---------------------------------------------------------------------------
// Multi-rank thread harness

/// Runs fn(rank) on one thread per rank and rethrows the first failure.
inline void run_ranks(int size, const std::function<void(int)>& fn) {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(size);
  for (int r = 0; r < size; ++r)
    threads.emplace_back([&, r] {
      try {
        fn(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace testsupport
