#include "parcover/learner.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <functional>
#include <thread>

#include "parcover/util.hpp"

namespace parcover {

namespace {

std::string variable_name(int index) {
  static const char letters[] = "NOPQRSTUVWXYZABCDEFGHIJKLM";
  std::string name(1, letters[index % 26]);
  if (index >= 26) name += std::to_string(index / 26);
  return name;
}

void collect_vars(const Term& t, std::vector<std::string>& order) {
  if (t.is_var()) {
    if (std::find(order.begin(), order.end(), t.name()) == order.end())
      order.push_back(t.name());
    return;
  }
  for (const Term& a : t.args()) collect_vars(a, order);
}

}  // namespace

Clause unit_clause(const std::string& functor, std::size_t arity) {
  Clause c;
  if (arity == 0) {
    c.head = Term::atom(functor);
    return c;
  }
  std::vector<Term> args;
  args.reserve(arity);
  for (std::size_t i = 0; i < arity; ++i)
    args.push_back(Term::var(variable_name(static_cast<int>(i))));
  c.head = Term::compound(functor, std::move(args));
  return c;
}

std::vector<LiteralTemplate> pool_from_background(
    const Background& bg, std::span<const Term> mode_facts,
    const std::string& target_functor, std::size_t target_arity) {
  std::vector<LiteralTemplate> pool;
  if (!mode_facts.empty()) {
    for (const Term& decl : mode_facts) {
      LiteralTemplate tmpl;
      if (decl.is_atom()) {
        tmpl.predicate = decl.name();
      } else if (decl.is_compound()) {
        tmpl.predicate = decl.name();
        for (const Term& arg : decl.args()) {
          if (arg.is_atom_named("+"))
            tmpl.out_mode.push_back(false);
          else if (arg.is_atom_named("-"))
            tmpl.out_mode.push_back(true);
          else
            throw std::invalid_argument("mode arguments must be + or -");
        }
      } else {
        throw std::invalid_argument("mode declaration must be an atom or compound");
      }
      pool.push_back(std::move(tmpl));
    }
    return pool;
  }
  for (const Clause& c : bg.clauses) {
    std::string functor = c.head.is_atom() ? c.head.name() : c.head.name();
    std::size_t arity = c.head.arity();
    if (functor == target_functor && arity == target_arity) continue;
    bool seen = std::any_of(pool.begin(), pool.end(), [&](const LiteralTemplate& t) {
      return t.predicate == functor && t.out_mode.size() == arity;
    });
    if (seen) continue;
    LiteralTemplate tmpl;
    tmpl.predicate = functor;
    tmpl.out_mode.assign(arity, false);
    pool.push_back(std::move(tmpl));
  }
  return pool;
}

std::vector<Clause> refine(const Clause& current,
                           std::span<const LiteralTemplate> pool) {
  std::vector<std::string> available;
  collect_vars(current.head, available);
  for (const Term& lit : current.body) collect_vars(lit, available);

  std::vector<Clause> children;
  for (const LiteralTemplate& tmpl : pool) {
    std::vector<std::string> used = available;
    auto fresh = [&used]() {
      for (int i = 0;; ++i) {
        std::string name = variable_name(i);
        if (std::find(used.begin(), used.end(), name) == used.end()) {
          used.push_back(name);
          return name;
        }
      }
    };
    Term literal = Term::atom(tmpl.predicate);
    if (!tmpl.out_mode.empty()) {
      std::vector<Term> args;
      args.reserve(tmpl.out_mode.size());
      for (std::size_t k = 0; k < tmpl.out_mode.size(); ++k) {
        if (tmpl.out_mode[k] || available.empty())
          args.push_back(Term::var(fresh()));
        else
          args.push_back(Term::var(available[k % available.size()]));
      }
      literal = Term::compound(tmpl.predicate, std::move(args));
    }
    bool duplicate = std::any_of(current.body.begin(), current.body.end(),
                                 [&](const Term& lit) { return lit == literal; });
    if (duplicate) continue;
    Clause child = current;
    child.body.push_back(std::move(literal));
    children.push_back(std::move(child));
  }
  return children;
}

bool theories_equal(const Theory& a, const Theory& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (clause_text(a[i].clause) != clause_text(b[i].clause) ||
        a[i].pos_count != b[i].pos_count || a[i].neg_count != b[i].neg_count)
      return false;
  }
  return true;
}

std::string theory_hash(const Theory& t) {
  std::uint64_t h = 14695981039346656037ull;
  for (const AcceptedClause& ac : t) {
    h = fnv1a64(clause_text(ac.clause), h);
    h = fnv1a64("|" + std::to_string(ac.pos_count) + "|" +
                    std::to_string(ac.neg_count) + ";",
                h);
  }
  return hex64(h);
}

std::string theory_listing(const Theory& t) {
  std::string out;
  for (const AcceptedClause& ac : t) {
    out += clause_text(ac.clause);
    out += ".  % pos=" + std::to_string(ac.pos_count) +
           " neg=" + std::to_string(ac.neg_count) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Protocol payloads

Term prove_request_to_term(const ProveRequest& req) {
  std::vector<Term> args;
  args.reserve(4);
  args.push_back(Term::integer(req.id));
  args.push_back(clause_to_term(req.clause));
  args.push_back(req.active_pos.to_term());
  args.push_back(req.active_neg.to_term());
  return Term::compound("prove", std::move(args));
}

ProveRequest prove_request_from_term(const Term& t) {
  if (!t.is_functor("prove", 4) || !t.args()[0].is_int())
    throw DecodeError("expected prove(Id,Clause,Pos,Neg)");
  ProveRequest req;
  req.id = t.args()[0].int_value();
  req.clause = clause_from_term(t.args()[1]);
  try {
    req.active_pos = IntervalSet::from_term(t.args()[2]);
    req.active_neg = IntervalSet::from_term(t.args()[3]);
  } catch (const std::invalid_argument& e) {
    throw DecodeError(e.what());
  }
  return req;
}

Term prove_result_to_term(const ProveResult& res) {
  std::vector<Term> args;
  args.reserve(4);
  args.push_back(Term::integer(res.id));
  args.push_back(Term::integer(res.worker));
  args.push_back(res.coverage.pos.to_term());
  args.push_back(res.coverage.neg.to_term());
  return Term::compound("result", std::move(args));
}

ProveResult prove_result_from_term(const Term& t) {
  if (!t.is_functor("result", 4) || !t.args()[0].is_int() || !t.args()[1].is_int())
    throw DecodeError("expected result(Id,Worker,Pos,Neg)");
  ProveResult res;
  res.id = t.args()[0].int_value();
  res.worker = static_cast<int>(t.args()[1].int_value());
  try {
    res.coverage.pos = IntervalSet::from_term(t.args()[2]);
    res.coverage.neg = IntervalSet::from_term(t.args()[3]);
  } catch (const std::invalid_argument& e) {
    throw DecodeError(e.what());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation backends

Coverage LocalCoverage::evaluate(const Clause& candidate,
                                 const IntervalSet& active_pos,
                                 const IntervalSet& active_neg) {
  return prover_.evaluate_local(candidate, pos_, neg_, active_pos, active_neg);
}

Coverage ClusterCoverage::evaluate(const Clause& candidate,
                                   const IntervalSet& active_pos,
                                   const IntervalSet& active_neg) {
  ProveRequest req{next_request_++, candidate, active_pos, active_neg};
  bcast_term_root(ep_, prove_request_to_term(req), 0);
  int workers = ep_.size() - 1;
  Coverage total;
  for (int i = 0; i < workers; ++i) {
    ReceivedTerm msg = receive_term(ep_, kAnySource, kResultTag);
    ProveResult res = prove_result_from_term(msg.term);
    if (res.id != req.id)
      throw ProtocolError("result for request " + std::to_string(res.id) +
                          " while waiting for " + std::to_string(req.id));
    total.pos = set_union(total.pos, res.coverage.pos);
    total.neg = set_union(total.neg, res.coverage.neg);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Search

InduceEngine::InduceEngine(std::string target_functor, std::size_t target_arity,
                           IntervalSet active_pos, IntervalSet active_neg,
                           std::vector<LiteralTemplate> pool, LearnerConfig config,
                           CoverageSource& source)
    : target_functor_(std::move(target_functor)),
      target_arity_(target_arity),
      active_pos_(std::move(active_pos)),
      active_neg_(std::move(active_neg)),
      pool_(std::move(pool)),
      cfg_(config),
      source_(source) {}

Coverage InduceEngine::evaluate(const Clause& candidate) {
  std::string text = clause_text(candidate);
  std::string key = text + "#v" + std::to_string(active_version_);
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    ++cache_hits_;
    log_.push_back({std::move(text), true, it->second.pos_count(),
                    it->second.neg_count()});
    return it->second;
  }
  Coverage cov = source_.evaluate(candidate, active_pos_, active_neg_);
  ++uncached_;
  log_.push_back({std::move(text), false, cov.pos_count(), cov.neg_count()});
  cache_.emplace(std::move(key), cov);
  return cov;
}

InduceResult InduceEngine::run() {
  while (!active_pos_.empty()) {
    std::int64_t seed = active_pos_.min();

    Clause current = unit_clause(target_functor_, target_arity_);
    Coverage cur_cov = evaluate(current);
    std::int64_t cur_score = score(cur_cov.pos_count(), cur_cov.neg_count());

    while (static_cast<int>(current.body.size()) < cfg_.max_clause_length) {
      std::vector<Clause> children = refine(current, pool_);
      bool improved = false;
      Clause best;
      Coverage best_cov;
      std::int64_t best_score = cur_score;
      for (Clause& child : children) {
        Coverage cov = evaluate(child);
        std::int64_t s = score(cov.pos_count(), cov.neg_count());
        if (s > best_score) {  // ties keep the earlier (pool-order) child
          best = std::move(child);
          best_cov = std::move(cov);
          best_score = s;
          improved = true;
        }
      }
      if (!improved) break;
      current = std::move(best);
      cur_cov = std::move(best_cov);
      cur_score = best_score;
    }

    if (cur_cov.pos_count() >= cfg_.min_pos && cur_cov.neg_count() <= cfg_.noise) {
      theory_.push_back({current, cur_cov.pos_count(), cur_cov.neg_count()});
      active_pos_ = set_subtract(active_pos_, cur_cov.pos);
    } else {
      // uncoverable residue: retire the seed and move on
      active_pos_ = set_subtract(active_pos_, IntervalSet::range(seed, seed));
    }
    note_active_change();
  }
  InduceResult result;
  result.theory = std::move(theory_);
  result.log = std::move(log_);
  result.uncached_evaluations = uncached_;
  result.cache_hits = cache_hits_;
  return result;
}

// ---------------------------------------------------------------------------
// Sessions

void worker_loop(Endpoint& ep, const Shard& pos, const Shard& neg,
                 const Background& bg, const LearnerConfig& cfg) {
  Prover prover(bg, cfg.depth_limit);
  for (;;) {
    Term msg = bcast_term_recv(ep, 0);
    if (msg.is_atom_named("shutdown")) {
      ep.finalize();
      return;
    }
    ProveRequest req = prove_request_from_term(msg);
    Coverage cov =
        prover.evaluate_local(req.clause, pos, neg, req.active_pos, req.active_neg);
    send_term(ep, prove_result_to_term({req.id, ep.rank(), cov}), 0, kResultTag);
  }
}

Term background_to_term(const Background& bg) {
  std::vector<Term> clauses;
  clauses.reserve(bg.clauses.size());
  for (const Clause& c : bg.clauses) clauses.push_back(clause_to_term(c));
  std::vector<Term> args;
  args.push_back(Term::list(std::move(clauses)));
  return Term::compound("background", std::move(args));
}

Background background_from_term(const Term& t, const LearnerConfig& cfg) {
  if (!t.is_functor("background", 1))
    throw DecodeError("expected background(Clauses)");
  Background bg;
  const Term* cell = &t.args()[0];
  while (cell->is_cons()) {
    bg.clauses.push_back(clause_from_term(cell->args()[0]));
    cell = &cell->args()[1];
  }
  if (!cell->is_nil()) throw DecodeError("background clause list must be proper");
  bg.cost_per_builtin_call = cfg.cost_per_builtin_call;
  return bg;
}

SessionOutcome run_master_session(Endpoint& ep, const ExampleSet& examples,
                                  const Background& bg,
                                  std::span<const LiteralTemplate> pool,
                                  const LearnerConfig& cfg) {
  if (ep.rank() != 0) throw std::invalid_argument("master session requires rank 0");
  if (ep.size() < 2) throw std::invalid_argument("a session needs at least one worker");
  int workers = ep.size() - 1;

  distribute_examples(ep, examples, workers);
  bcast_term_root(ep, background_to_term(bg), 0);

  std::string target_functor = "target";
  std::size_t target_arity = 1;
  if (!examples.positives.empty()) {
    const Term& goal = examples.positives.front().goal;
    target_functor = goal.name();
    target_arity = goal.arity();
  }

  IntervalSet all_pos =
      IntervalSet::range(0, static_cast<std::int64_t>(examples.positives.size()) - 1);
  IntervalSet all_neg =
      IntervalSet::range(0, static_cast<std::int64_t>(examples.negatives.size()) - 1);

  ClusterCoverage source(ep);
  InduceEngine engine(target_functor, target_arity, all_pos, all_neg,
                      std::vector<LiteralTemplate>(pool.begin(), pool.end()), cfg,
                      source);
  InduceResult result = engine.run();
  bcast_term_root(ep, Term::atom("shutdown"), 0);

  SessionOutcome out;
  out.theory = std::move(result.theory);
  out.log = std::move(result.log);
  out.uncached_evaluations = result.uncached_evaluations;
  out.cache_hits = result.cache_hits;
  out.master_counters = ep.counters();
  ep.finalize();
  return out;
}

TransportCounters run_worker_session(Endpoint& ep, const LearnerConfig& cfg) {
  auto [pos, neg] = receive_shard(ep);
  Background bg = background_from_term(bcast_term_recv(ep, 0), cfg);
  worker_loop(ep, pos, neg, bg, cfg);
  return ep.counters();
}

namespace {

SessionOutcome run_threaded_session(
    const ExampleSet& examples, const Background& bg,
    std::span<const LiteralTemplate> pool, int workers, const LearnerConfig& cfg,
    const std::function<std::unique_ptr<Endpoint>(int)>& make_endpoint) {
  if (workers < 1) throw std::invalid_argument("need at least one worker");

  std::vector<std::thread> threads;
  std::vector<TransportCounters> worker_counters(workers + 1);
  std::vector<std::exception_ptr> errors(workers + 1);

  auto t0 = std::chrono::steady_clock::now();
  SessionOutcome out;
  for (int r = 1; r <= workers; ++r) {
    threads.emplace_back([&, r] {
      try {
        auto ep = make_endpoint(r);
        worker_counters[r] = run_worker_session(*ep, cfg);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    });
  }
  try {
    auto ep = make_endpoint(0);
    out = run_master_session(*ep, examples, bg, pool, cfg);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (std::thread& t : threads) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  auto t1 = std::chrono::steady_clock::now();
  out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  out.total_sends = out.master_counters.sends;
  for (int r = 1; r <= workers; ++r) out.total_sends += worker_counters[r].sends;
  return out;
}

}  // namespace

SessionOutcome run_simulated_session(const ExampleSet& examples, const Background& bg,
                                     std::span<const LiteralTemplate> pool, int workers,
                                     const LearnerConfig& cfg,
                                     std::uint64_t schedule_seed) {
  SimCluster cluster(workers + 1, schedule_seed);
  return run_threaded_session(examples, bg, pool, workers, cfg,
                              [&](int rank) { return cluster.init(rank); });
}

SessionOutcome run_tcp_session(const ExampleSet& examples, const Background& bg,
                               std::span<const LiteralTemplate> pool, int workers,
                               const LearnerConfig& cfg) {
  std::vector<HostPort> nodes = loopback_nodes(workers + 1);
  return run_threaded_session(examples, bg, pool, workers, cfg,
                              [&](int rank) { return tcp_init(nodes, rank); });
}

InduceResult induce_reference(const ExampleSet& examples, const Background& bg,
                              std::span<const LiteralTemplate> pool,
                              const LearnerConfig& cfg) {
  Prover prover(bg, cfg.depth_limit);
  LocalCoverage source(prover, examples.positives, examples.negatives);

  std::string target_functor = "target";
  std::size_t target_arity = 1;
  if (!examples.positives.empty()) {
    const Term& goal = examples.positives.front().goal;
    target_functor = goal.name();
    target_arity = goal.arity();
  }
  IntervalSet all_pos =
      IntervalSet::range(0, static_cast<std::int64_t>(examples.positives.size()) - 1);
  IntervalSet all_neg =
      IntervalSet::range(0, static_cast<std::int64_t>(examples.negatives.size()) - 1);
  InduceEngine engine(target_functor, target_arity, all_pos, all_neg,
                      std::vector<LiteralTemplate>(pool.begin(), pool.end()), cfg,
                      source);
  return engine.run();
}

}  // namespace parcover
