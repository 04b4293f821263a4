#include "parcover/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "parcover/util.hpp"

namespace parcover {

namespace {

// ANY-tag filters match user traffic only; internal frames are always
// addressed by their exact reserved tag.
bool matches(const Envelope& e, int source, std::int64_t tag) {
  if (source != kAnySource && e.source != source) return false;
  if (tag == kAnyTag) return e.tag < kMaxUserTag;
  return e.tag == static_cast<std::uint32_t>(tag);
}

struct Mailbox {
  std::mutex m;
  std::condition_variable cv;
  std::deque<Envelope> q;
  std::vector<char> gone;  // indexed by rank; finalized or disconnected
  bool poisoned = false;
  std::string poison_reason;
};

bool candidates_all_gone(const Mailbox& mb, int self, int size, int source) {
  if (source != kAnySource) return mb.gone[source] != 0;
  for (int r = 0; r < size; ++r)
    if (r != self && !mb.gone[r]) return false;
  return true;
}

[[noreturn]] void throw_peer_lost(int source) {
  if (source == kAnySource)
    throw PeerLost("all possible senders have finalized");
  throw PeerLost("rank " + std::to_string(source) + " has finalized");
}

Envelope mailbox_receive(Mailbox& mb, int self, int size, int source, std::int64_t tag) {
  std::unique_lock lk(mb.m);
  for (;;) {
    for (auto it = mb.q.begin(); it != mb.q.end(); ++it) {
      if (matches(*it, source, tag)) {
        Envelope env = std::move(*it);
        mb.q.erase(it);
        return env;
      }
    }
    if (mb.poisoned) throw MismatchedRoot(mb.poison_reason);
    if (candidates_all_gone(mb, self, size, source)) throw_peer_lost(source);
    mb.cv.wait(lk);
  }
}

MessageInfo mailbox_probe(Mailbox& mb, int self, int size, int source, std::int64_t tag) {
  std::unique_lock lk(mb.m);
  for (;;) {
    for (const Envelope& e : mb.q) {
      if (matches(e, source, tag)) return {e.source, e.tag, e.payload.size()};
    }
    if (mb.poisoned) throw MismatchedRoot(mb.poison_reason);
    if (candidates_all_gone(mb, self, size, source)) throw_peer_lost(source);
    mb.cv.wait(lk);
  }
}

void validate_filters(int source, std::int64_t tag, int size) {
  if (source != kAnySource && (source < 0 || source >= size))
    throw TransportError("source filter out of range");
  if (tag != kAnyTag &&
      (tag < 0 || tag > static_cast<std::int64_t>(0xFFFFFFFFll) ||
       tag >= static_cast<std::int64_t>(kMaxUserTag)))
    throw TransportError("tag filter must name a user tag or ANY");
}

}  // namespace

// ---------------------------------------------------------------------------
// Endpoint base: argument checks, counters, broadcast rounds

void Endpoint::require_live() const {
  if (finalized_) throw TransportError("operation on a finalized endpoint");
}

void Endpoint::check_send_args(int dest, std::uint32_t tag) const {
  if (dest < 0 || dest >= size_)
    throw TransportError("destination rank " + std::to_string(dest) + " out of range");
  if (dest == rank_)
    throw SelfSendError("rank " + std::to_string(rank_) + " cannot send to itself");
  if (tag >= kMaxUserTag) throw TransportError("tag is reserved for internal use");
}

void Endpoint::send(int dest, std::uint32_t tag, std::string_view payload) {
  require_live();
  check_send_args(dest, tag);
  raw_send(dest, tag, payload);
  ++counters_.sends;
  ++counters_.sends_by_tag[tag];
}

MessageInfo Endpoint::probe(int source, std::int64_t tag) {
  require_live();
  validate_filters(source, tag, size_);
  return raw_probe(source, tag);
}

Envelope Endpoint::receive(int source, std::int64_t tag) {
  require_live();
  validate_filters(source, tag, size_);
  Envelope env = raw_receive(source, tag);
  ++counters_.receives;
  ++counters_.receives_by_tag[env.tag];
  return env;
}

// Three phases per round: root fans the payload out, gathers one ack per
// receiver, then releases everyone. Receivers return only after the release,
// so nobody leaves the round before all participants have entered it.
void Endpoint::broadcast_root(std::string_view payload) {
  require_live();
  broadcast_round_begin(rank_);
  std::vector<int> receivers;
  for (int r = 0; r < size_; ++r)
    if (r != rank_ && !peer_gone(r)) receivers.push_back(r);
  for (int r : receivers) raw_send(r, kBcastTag, payload);
  for (std::size_t i = 0; i < receivers.size(); ++i)
    raw_receive(kAnySource, static_cast<std::int64_t>(kBcastTag));
  for (int r : receivers) raw_send(r, kBcastTag, "");
  ++counters_.broadcast_rounds;
}

std::string Endpoint::broadcast_recv(int root) {
  require_live();
  if (root < 0 || root >= size_) throw TransportError("broadcast root out of range");
  if (root == rank_) throw TransportError("the root rank must call broadcast_root");
  broadcast_round_begin(root);
  Envelope env = raw_receive(root, static_cast<std::int64_t>(kBcastTag));
  raw_send(root, kBcastTag, "");
  raw_receive(root, static_cast<std::int64_t>(kBcastTag));
  ++counters_.broadcast_rounds;
  return std::move(env.payload);
}

// ---------------------------------------------------------------------------
// Simulated cluster

struct SimState {
  int size = 1;
  std::uint64_t seed = 0;
  std::vector<std::unique_ptr<Mailbox>> mailboxes;

  std::mutex m;  // may be held while taking a mailbox lock, never vice versa
  std::condition_variable cv;
  std::vector<char> claimed;
  int claimed_count = 0;
  int live = 0;
  struct Round {
    int root;
    int arrivals;
    int expected;
  };
  std::map<std::uint64_t, Round> rounds;
  bool poisoned = false;
  std::string poison_reason;

  // requires m held
  void poison_locked(const std::string& reason) {
    poisoned = true;
    poison_reason = reason;
    cv.notify_all();
    for (auto& mb : mailboxes) {
      std::lock_guard lk(mb->m);
      mb->poisoned = true;
      mb->poison_reason = reason;
      mb->cv.notify_all();
    }
  }
};

namespace {

class SimEndpoint final : public Endpoint {
 public:
  SimEndpoint(std::shared_ptr<SimState> st, int rank)
      : Endpoint(rank, st->size),
        st_(std::move(st)),
        jitter_(st_->seed * 0x9E3779B97F4A7C15ull +
                static_cast<std::uint64_t>(rank) * 0xBF58476D1CE4E5B9ull + 1) {}

  ~SimEndpoint() override { do_finalize(); }

  void finalize() override { do_finalize(); }

 protected:
  void raw_send(int dest, std::uint32_t tag, std::string_view payload) override {
    wait_all_initialized();
    maybe_jitter();
    Mailbox& mb = *st_->mailboxes[dest];
    std::lock_guard lk(mb.m);
    if (mb.poisoned) throw MismatchedRoot(mb.poison_reason);
    if (mb.gone[dest])
      throw PeerLost("rank " + std::to_string(dest) + " has finalized");
    mb.q.push_back({rank_, tag, std::string(payload)});
    mb.cv.notify_all();
  }

  Envelope raw_receive(int source, std::int64_t tag) override {
    wait_all_initialized();
    return mailbox_receive(*st_->mailboxes[rank_], rank_, size_, source, tag);
  }

  MessageInfo raw_probe(int source, std::int64_t tag) override {
    wait_all_initialized();
    return mailbox_probe(*st_->mailboxes[rank_], rank_, size_, source, tag);
  }

  bool peer_gone(int rank) override {
    Mailbox& mb = *st_->mailboxes[rank_];
    std::lock_guard lk(mb.m);
    return mb.gone[rank] != 0;
  }

  void broadcast_round_begin(int root) override {
    std::uint64_t idx = bcast_round_++;
    std::lock_guard lk(st_->m);
    if (st_->poisoned) throw MismatchedRoot(st_->poison_reason);
    auto [it, inserted] = st_->rounds.try_emplace(idx, SimState::Round{root, 0, st_->live});
    if (!inserted && it->second.root != root) {
      st_->poison_locked("broadcast round " + std::to_string(idx) +
                         ": participants disagree on the root (" +
                         std::to_string(it->second.root) + " vs " +
                         std::to_string(root) + ")");
      throw MismatchedRoot(st_->poison_reason);
    }
    if (++it->second.arrivals >= it->second.expected) st_->rounds.erase(it);
  }

 private:
  void wait_all_initialized() {
    if (rendezvous_done_) return;
    std::unique_lock lk(st_->m);
    st_->cv.wait(lk, [&] { return st_->claimed_count == st_->size || st_->poisoned; });
    if (st_->poisoned) throw MismatchedRoot(st_->poison_reason);
    rendezvous_done_ = true;
  }

  void maybe_jitter() {
    if (st_->seed == 0) return;
    std::this_thread::sleep_for(std::chrono::microseconds(jitter_() % 200));
  }

  void do_finalize() {
    if (finalized_) return;
    finalized_ = true;
    {
      std::lock_guard lk(st_->m);
      --st_->live;
    }
    for (auto& mb : st_->mailboxes) {
      std::lock_guard lk(mb->m);
      mb->gone[rank_] = true;
      mb->cv.notify_all();
    }
  }

  std::shared_ptr<SimState> st_;
  std::mt19937_64 jitter_;
  std::uint64_t bcast_round_ = 0;
  bool rendezvous_done_ = false;
};

}  // namespace

SimCluster::SimCluster(Options opts) : state_(std::make_shared<SimState>()) {
  if (opts.size < 1) throw InitError("cluster size must be at least 1");
  state_->size = opts.size;
  state_->seed = opts.schedule_seed;
  state_->live = opts.size;
  state_->claimed.assign(opts.size, 0);
  state_->mailboxes.reserve(opts.size);
  for (int r = 0; r < opts.size; ++r) {
    auto mb = std::make_unique<Mailbox>();
    mb->gone.assign(opts.size, 0);
    state_->mailboxes.push_back(std::move(mb));
  }
}

SimCluster::~SimCluster() = default;

int SimCluster::size() const { return state_->size; }

std::unique_ptr<Endpoint> SimCluster::init(int rank) {
  std::lock_guard lk(state_->m);
  if (rank < 0 || rank >= state_->size)
    throw InitError("rank " + std::to_string(rank) + " out of range");
  if (state_->claimed[rank])
    throw InitError("rank " + std::to_string(rank) + " already initialized");
  state_->claimed[rank] = 1;
  ++state_->claimed_count;
  state_->cv.notify_all();
  return std::make_unique<SimEndpoint>(state_, rank);
}

// ---------------------------------------------------------------------------
// TCP mesh

namespace {

constexpr char kMagic[4] = {0x54, 0x50, 0x31, 0x00};  // "TP1\0"

bool read_exact(int fd, void* buf, std::size_t len) {
  auto* p = static_cast<char*>(buf);
  while (len > 0) {
    ssize_t n = ::recv(fd, p, len, 0);
    if (n == 0) return false;
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool write_all(int fd, const char* p, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

int try_connect(const HostPort& hp) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(hp.host.c_str(), std::to_string(hp.port).c_str(), &hints, &res) != 0)
    return -1;
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd >= 0) set_nodelay(fd);
  return fd;
}

int connect_with_retry(const HostPort& hp, std::chrono::milliseconds budget) {
  auto deadline = std::chrono::steady_clock::now() + budget;
  for (;;) {
    int fd = try_connect(hp);
    if (fd >= 0) return fd;
    if (std::chrono::steady_clock::now() >= deadline)
      throw InitError("cannot reach " + hp.host + ":" + std::to_string(hp.port));
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

int make_listener(const HostPort& hp) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (::getaddrinfo(hp.host.c_str(), std::to_string(hp.port).c_str(), &hints, &res) != 0)
    throw InitError("cannot resolve " + hp.host);
  int fd = -1;
  std::string err = "cannot bind " + hp.host + ":" + std::to_string(hp.port);
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw InitError(err);
  return fd;
}

int accept_with_deadline(int listen_fd, std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw InitError("timed out waiting for peers to connect");
    pollfd pfd{listen_fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw InitError("poll failed while accepting peers");
    }
    if (rc == 0) throw InitError("timed out waiting for peers to connect");
    int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd >= 0) {
      set_nodelay(fd);
      return fd;
    }
  }
}

class TcpEndpoint final : public Endpoint {
 public:
  TcpEndpoint(const std::vector<HostPort>& nodes, int rank)
      : Endpoint(rank, static_cast<int>(nodes.size())) {
    mb_.gone.assign(size_, 0);
    peers_.resize(size_);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(20);
    listen_fd_ = make_listener(nodes[rank]);
    try {
      // lower ranks listen, higher ranks dial
      for (int j = 0; j < rank_; ++j) {
        int fd = connect_with_retry(nodes[j], std::chrono::seconds(15));
        std::string hello(kMagic, 4);
        put_u32_be(hello, static_cast<std::uint32_t>(rank_));
        if (!write_all(fd, hello.data(), hello.size())) {
          ::close(fd);
          throw InitError("handshake with rank " + std::to_string(j) + " failed");
        }
        peers_[j].fd = fd;
      }
      for (int need = size_ - 1 - rank_; need > 0; --need) {
        int fd = accept_with_deadline(listen_fd_, deadline);
        unsigned char hello[8];
        if (!read_exact(fd, hello, sizeof hello) ||
            std::memcmp(hello, kMagic, 4) != 0) {
          ::close(fd);
          throw InitError("bad handshake from a connecting peer");
        }
        int peer = static_cast<int>(get_u32_be(hello + 4));
        if (peer <= rank_ || peer >= size_ || peers_[peer].fd >= 0) {
          ::close(fd);
          throw InitError("ranks collide: duplicate or invalid peer rank " +
                          std::to_string(peer));
        }
        peers_[peer].fd = fd;
      }
    } catch (...) {
      close_all();
      throw;
    }
    for (int r = 0; r < size_; ++r)
      if (r != rank_)
        peers_[r].reader = std::thread(&TcpEndpoint::reader_loop, this, r);
    barrier();
  }

  ~TcpEndpoint() override { do_finalize(); }

  void finalize() override { do_finalize(); }

 protected:
  void raw_send(int dest, std::uint32_t tag, std::string_view payload) override {
    {
      std::lock_guard lk(mb_.m);
      if (mb_.gone[dest])
        throw PeerLost("rank " + std::to_string(dest) + " has finalized");
    }
    Peer& p = peers_[dest];
    std::string frame;
    frame.reserve(12 + payload.size());
    put_u32_be(frame, tag);
    put_u64_be(frame, payload.size());
    frame.append(payload);
    std::lock_guard lk(p.send_m);
    if (!write_all(p.fd, frame.data(), frame.size())) {
      mark_gone(dest);
      throw PeerLost("connection to rank " + std::to_string(dest) + " lost");
    }
  }

  Envelope raw_receive(int source, std::int64_t tag) override {
    return mailbox_receive(mb_, rank_, size_, source, tag);
  }

  MessageInfo raw_probe(int source, std::int64_t tag) override {
    return mailbox_probe(mb_, rank_, size_, source, tag);
  }

  bool peer_gone(int rank) override {
    std::lock_guard lk(mb_.m);
    return mb_.gone[rank] != 0;
  }

 private:
  struct Peer {
    int fd = -1;
    std::thread reader;
    std::mutex send_m;
  };

  void barrier() {
    if (size_ == 1) return;
    if (rank_ == 0) {
      for (int i = 1; i < size_; ++i)
        raw_receive(kAnySource, static_cast<std::int64_t>(kBarrierTag));
      for (int r = 1; r < size_; ++r) raw_send(r, kBarrierTag, "");
    } else {
      raw_send(0, kBarrierTag, "");
      raw_receive(0, static_cast<std::int64_t>(kBarrierTag));
    }
  }

  void reader_loop(int peer) {
    int fd = peers_[peer].fd;
    for (;;) {
      unsigned char hdr[12];
      if (!read_exact(fd, hdr, sizeof hdr)) break;
      std::uint32_t tag = get_u32_be(hdr);
      std::uint64_t len = get_u64_be(hdr + 4);
      std::string payload(static_cast<std::size_t>(len), '\0');
      if (len > 0 && !read_exact(fd, payload.data(), payload.size())) break;
      if (tag == kFinTag) {
        mark_gone(peer);
        continue;  // drain until EOF so the peer's close is clean
      }
      std::lock_guard lk(mb_.m);
      mb_.q.push_back({peer, tag, std::move(payload)});
      mb_.cv.notify_all();
    }
    mark_gone(peer);
  }

  void mark_gone(int peer) {
    std::lock_guard lk(mb_.m);
    mb_.gone[peer] = 1;
    mb_.cv.notify_all();
  }

  void do_finalize() {
    if (finalized_) return;
    finalized_ = true;
    std::string fin;
    put_u32_be(fin, kFinTag);
    put_u64_be(fin, 0);
    for (int r = 0; r < size_; ++r) {
      if (r == rank_ || peers_[r].fd < 0) continue;
      std::lock_guard lk(peers_[r].send_m);
      write_all(peers_[r].fd, fin.data(), fin.size());  // best effort
      ::shutdown(peers_[r].fd, SHUT_RDWR);
    }
    for (int r = 0; r < size_; ++r)
      if (peers_[r].reader.joinable()) peers_[r].reader.join();
    close_all();
  }

  void close_all() {
    for (Peer& p : peers_) {
      if (p.fd >= 0) {
        ::close(p.fd);
        p.fd = -1;
      }
    }
    if (listen_fd_ >= 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
  }

  Mailbox mb_;
  std::deque<Peer> peers_;
  int listen_fd_ = -1;
};

}  // namespace

std::unique_ptr<Endpoint> tcp_init(const std::vector<HostPort>& nodes, int rank) {
  if (nodes.empty()) throw InitError("empty node list");
  if (rank < 0 || rank >= static_cast<int>(nodes.size()))
    throw InitError("rank " + std::to_string(rank) + " not in the node list");
  return std::make_unique<TcpEndpoint>(nodes, rank);
}

std::uint16_t pick_free_port() {
  auto nodes = loopback_nodes(1);
  return nodes[0].port;
}

std::vector<HostPort> loopback_nodes(int count) {
  std::vector<int> fds;
  std::vector<HostPort> nodes;
  for (int i = 0; i < count; ++i) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw InitError("cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(fd);
      throw InitError("cannot bind an ephemeral port");
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    nodes.push_back({"127.0.0.1", ntohs(addr.sin_port)});
    fds.push_back(fd);  // hold until all ports are distinct
  }
  for (int fd : fds) ::close(fd);
  return nodes;
}

// ---------------------------------------------------------------------------
// Cluster config files

ClusterConfig parse_cluster_config(std::string_view text) {
  ClusterConfig cfg;
  bool backend_seen = false;
  bool size_seen = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#' || key[0] == '%') continue;
    if (key == "backend") {
      std::string value;
      ls >> value;
      if (value == "simulated")
        cfg.backend = BackendKind::Simulated;
      else if (value == "tcp")
        cfg.backend = BackendKind::Tcp;
      else
        throw InitError("config line " + std::to_string(lineno) +
                        ": backend must be simulated or tcp");
      backend_seen = true;
    } else if (key == "size") {
      if (!(ls >> cfg.size) || cfg.size < 1)
        throw InitError("config line " + std::to_string(lineno) + ": bad size");
      size_seen = true;
    } else if (key == "node") {
      std::string value;
      ls >> value;
      auto colon = value.rfind(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 >= value.size())
        throw InitError("config line " + std::to_string(lineno) +
                        ": node must be host:port");
      HostPort hp;
      hp.host = value.substr(0, colon);
      hp.port = static_cast<std::uint16_t>(std::stoul(value.substr(colon + 1)));
      cfg.nodes.push_back(std::move(hp));
    } else if (key == "seed") {
      if (!(ls >> cfg.schedule_seed))
        throw InitError("config line " + std::to_string(lineno) + ": bad seed");
    } else {
      throw InitError("config line " + std::to_string(lineno) + ": unknown key '" +
                      key + "'");
    }
  }
  if (!backend_seen) throw InitError("config must name a backend");
  if (cfg.backend == BackendKind::Tcp) {
    if (cfg.nodes.empty()) throw InitError("tcp config needs node lines");
    cfg.size = static_cast<int>(cfg.nodes.size());
  } else if (!size_seen) {
    throw InitError("simulated config needs a size line");
  }
  return cfg;
}

ClusterConfig load_cluster_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InitError("cannot open cluster config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cluster_config(ss.str());
}

}  // namespace parcover
