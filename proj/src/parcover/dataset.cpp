#include "parcover/dataset.hpp"

#include <fstream>

#include "parcover/termlink.hpp"

namespace parcover {

namespace {

bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '%') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

const char* polarity_name(Polarity p) {
  return p == Polarity::Positive ? "pos" : "neg";
}

Polarity polarity_from_atom(const Term& t) {
  if (t.is_atom_named("pos")) return Polarity::Positive;
  if (t.is_atom_named("neg")) return Polarity::Negative;
  throw DecodeError("example polarity must be pos or neg");
}

}  // namespace

DatasetParseError::DatasetParseError(const std::filesystem::path& path, int line,
                                     const std::string& why)
    : std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + why),
      line_(line) {}

NonGroundExample::NonGroundExample(const std::filesystem::path& path, int line)
    : std::runtime_error(path.string() + ":" + std::to_string(line) +
                         ": example contains a variable"),
      line_(line) {}

std::vector<Example> load_example_file(const std::filesystem::path& path,
                                       Polarity polarity) {
  std::ifstream in(path);
  if (!in) throw DatasetParseError(path, 0, "cannot open file");
  std::vector<Example> out;
  std::string line;
  int lineno = 0;
  std::int64_t next_id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    Term goal;
    try {
      goal = parse_term(line);
    } catch (const std::runtime_error& e) {
      throw DatasetParseError(path, lineno, e.what());
    }
    if (!goal.is_ground()) throw NonGroundExample(path, lineno);
    out.push_back({next_id++, polarity, std::move(goal)});
  }
  return out;
}

ExampleSet load_examples(const std::filesystem::path& pos_path,
                         const std::filesystem::path& neg_path) {
  ExampleSet set;
  set.positives = load_example_file(pos_path, Polarity::Positive);
  set.negatives = load_example_file(neg_path, Polarity::Negative);
  return set;
}

int worker_for(std::int64_t id, int workers) {
  if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
  return static_cast<int>(id % workers) + 1;
}

void distribute_examples(Endpoint& master, const ExampleSet& examples, int workers) {
  auto ship = [&](const std::vector<Example>& list) {
    for (const Example& e : list) {
      std::vector<Term> args;
      args.reserve(3);
      args.push_back(Term::integer(e.id));
      args.push_back(Term::atom(polarity_name(e.polarity)));
      args.push_back(e.goal);
      send_term(master, Term::compound("ex", std::move(args)),
                worker_for(e.id, workers), kShardTag);
    }
  };
  ship(examples.positives);
  ship(examples.negatives);
  for (int w = 1; w <= workers; ++w)
    send_term(master, Term::atom("end_of_examples"), w, kShardTag);
}

std::pair<Shard, Shard> receive_shard(Endpoint& worker) {
  Shard pos{worker.rank(), {}};
  Shard neg{worker.rank(), {}};
  for (;;) {
    ReceivedTerm msg = receive_term(worker, 0, kShardTag);
    if (msg.term.is_atom_named("end_of_examples")) break;
    if (!msg.term.is_functor("ex", 3) || !msg.term.args()[0].is_int())
      throw DecodeError("shard stream expects ex(Id,Pol,Goal) terms");
    Example e{msg.term.args()[0].int_value(),
              polarity_from_atom(msg.term.args()[1]), msg.term.args()[2]};
    (e.polarity == Polarity::Positive ? pos : neg).examples.push_back(std::move(e));
  }
  return {std::move(pos), std::move(neg)};
}

}  // namespace parcover
