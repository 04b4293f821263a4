#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "parcover/term.hpp"
#include "parcover/transport.hpp"

namespace parcover {

inline constexpr std::uint32_t kShardTag = 10;

enum class Polarity { Positive, Negative };

/// One labelled ground example. IDs are dense from 0 in file-read order,
/// independently per polarity class.
struct Example {
  std::int64_t id;
  Polarity polarity;
  Term goal;
};

struct Shard {
  int worker = 0;
  std::vector<Example> examples;
};

struct ExampleSet {
  std::vector<Example> positives;
  std::vector<Example> negatives;
};

class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(const std::filesystem::path& path, int line, const std::string& why);
  int line() const { return line_; }

 private:
  int line_;
};

class NonGroundExample : public std::runtime_error {
 public:
  NonGroundExample(const std::filesystem::path& path, int line);
  int line() const { return line_; }

 private:
  int line_;
};

/// One ground term per line ending in '.'; blank lines and '%' comments
/// are skipped.
std::vector<Example> load_example_file(const std::filesystem::path& path,
                                       Polarity polarity);
ExampleSet load_examples(const std::filesystem::path& pos_path,
                         const std::filesystem::path& neg_path);

/// Modulo sharding: example id goes to worker (id mod W) + 1. Rank 0 is
/// the master and holds no shard.
int worker_for(std::int64_t id, int workers);

/// Master side: streams each worker its modulo shard as ex(Id,Pol,Goal)
/// messages with tag kShardTag, closed by one end_of_examples term.
void distribute_examples(Endpoint& master, const ExampleSet& examples, int workers);

/// Worker side: collects this rank's positive and negative shards.
std::pair<Shard, Shard> receive_shard(Endpoint& worker);

}  // namespace parcover
