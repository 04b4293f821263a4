#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace parcover {

inline constexpr int kAnySource = -1;
inline constexpr std::int64_t kAnyTag = -1;
/// Tags at or above this value are reserved for internal traffic.
inline constexpr std::uint32_t kMaxUserTag = 0xFFFF0000u;

struct MessageInfo {
  int source;
  std::uint32_t tag;
  std::size_t length;
};

struct Envelope {
  int source;
  std::uint32_t tag;
  std::string payload;
};

struct TransportCounters {
  std::uint64_t sends = 0;
  std::uint64_t receives = 0;
  std::uint64_t broadcast_rounds = 0;
  std::map<std::uint32_t, std::uint64_t> sends_by_tag;
  std::map<std::uint32_t, std::uint64_t> receives_by_tag;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InitError : public TransportError {
 public:
  using TransportError::TransportError;
};
class PeerLost : public TransportError {
 public:
  using TransportError::TransportError;
};
class SelfSendError : public TransportError {
 public:
  using TransportError::TransportError;
};
class MismatchedRoot : public TransportError {
 public:
  using TransportError::TransportError;
};

/// One logical node's handle on the cluster. Blocking, tag-filtered,
/// rank-addressed messaging; rank 0 is the master by convention. An endpoint
/// must be driven from one execution context at a time.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  int rank() const { return rank_; }
  int size() const { return size_; }
  bool finalized() const { return finalized_; }
  const TransportCounters& counters() const { return counters_; }

  /// Blocks until the payload is durably enqueued for dest. Per
  /// (source,dest,tag) delivery follows send order.
  void send(int dest, std::uint32_t tag, std::string_view payload);

  /// Blocks until a matching message is queued; reports it without
  /// dequeuing. The earliest queued match wins.
  MessageInfo probe(int source = kAnySource, std::int64_t tag = kAnyTag);

  /// Blocks until a matching message is queued, dequeues and returns the
  /// earliest match; non-matching messages stay queued untouched.
  Envelope receive(int source = kAnySource, std::int64_t tag = kAnyTag);

  /// Synchronous broadcast round: the root calls broadcast_root, everyone
  /// else broadcast_recv with the agreed root. No participant returns
  /// before all live ranks have entered the round.
  void broadcast_root(std::string_view payload);
  std::string broadcast_recv(int root);

  /// Idempotent. Peers' subsequent sends to this rank raise PeerLost.
  virtual void finalize() = 0;

 protected:
  Endpoint(int rank, int size) : rank_(rank), size_(size) {}

  virtual void raw_send(int dest, std::uint32_t tag, std::string_view payload) = 0;
  virtual Envelope raw_receive(int source, std::int64_t tag) = 0;
  virtual MessageInfo raw_probe(int source, std::int64_t tag) = 0;
  virtual bool peer_gone(int rank) = 0;
  /// Called at the start of every broadcast round with the declared root.
  virtual void broadcast_round_begin(int root) { (void)root; }

  void require_live() const;
  void check_send_args(int dest, std::uint32_t tag) const;

  static constexpr std::uint32_t kBcastTag = 0xFFFFFFFFu;
  static constexpr std::uint32_t kBarrierTag = 0xFFFFFFFEu;
  static constexpr std::uint32_t kFinTag = 0xFFFFFFFDu;

  int rank_;
  int size_;
  bool finalized_ = false;
  TransportCounters counters_;
};

/// Deterministic in-process cluster: one Endpoint per logical node, each
/// meant to be driven by its own thread. A nonzero schedule_seed injects
/// reproducible per-send delays to randomize cross-node interleavings.
class SimCluster {
 public:
  struct Options {
    int size = 1;
    std::uint64_t schedule_seed = 0;
  };

  explicit SimCluster(Options opts);
  explicit SimCluster(int size, std::uint64_t schedule_seed = 0)
      : SimCluster(Options{size, schedule_seed}) {}
  ~SimCluster();

  int size() const;

  /// One endpoint per rank per cluster; a second claim raises InitError.
  /// Sends block until every rank has been claimed (rendezvous).
  std::unique_ptr<Endpoint> init(int rank);

 private:
  std::shared_ptr<struct SimState> state_;
};

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// Full-mesh TCP cluster over a shared host list; rank = index in the list.
/// Blocks until the mesh is complete and all ranks passed the init barrier.
std::unique_ptr<Endpoint> tcp_init(const std::vector<HostPort>& nodes, int rank);

/// Binds an ephemeral listener to discover a free loopback port.
std::uint16_t pick_free_port();
std::vector<HostPort> loopback_nodes(int count);

enum class BackendKind { Simulated, Tcp };

struct ClusterConfig {
  BackendKind backend = BackendKind::Simulated;
  int size = 1;
  std::vector<HostPort> nodes;
  std::uint64_t schedule_seed = 0;
};

/// Line-oriented config: `backend simulated|tcp`, `size N`,
/// `node host:port` (repeated, tcp), optional `seed N`.
ClusterConfig parse_cluster_config(std::string_view text);
ClusterConfig load_cluster_config(const std::filesystem::path& path);

}  // namespace parcover
