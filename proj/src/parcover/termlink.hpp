#pragma once

#include <stdexcept>

#include "parcover/term.hpp"
#include "parcover/transport.hpp"

namespace parcover {

/// A received payload was not a parseable canonical term, or a broadcast
/// length prefix disagreed with its payload.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A broadcast participant used the wrong calling form for its rank.
class RoleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReceivedTerm {
  Term term;
  int source;
  std::uint32_t tag;
};

/// Sends the canonical text of t (UTF-8) as one message.
void send_term(Endpoint& ep, const Term& t, int dest, std::uint32_t tag);

/// Probes for the exact length, receives, and parses. The message is always
/// accepted once source and tag match; content checks are the caller's job.
ReceivedTerm receive_term(Endpoint& ep, int source = kAnySource,
                          std::int64_t tag = kAnyTag);

/// Broadcasts a term in two rounds: an 8-byte big-endian byte length, then
/// the term text. The caller's rank must equal root for the root form and
/// differ from it for the recv form (RoleError otherwise).
void bcast_term_root(Endpoint& ep, const Term& t, int root);
Term bcast_term_recv(Endpoint& ep, int root);

}  // namespace parcover
