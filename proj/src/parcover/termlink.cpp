#include "parcover/termlink.hpp"

#include "parcover/util.hpp"

namespace parcover {

namespace {

Term parse_payload(const std::string& payload) {
  try {
    return parse_term(payload);
  } catch (const SyntaxError& e) {
    throw DecodeError(std::string("payload is not a canonical term: ") + e.what());
  } catch (const TrailingGarbage& e) {
    throw DecodeError(std::string("payload is not a single term: ") + e.what());
  }
}

}  // namespace

void send_term(Endpoint& ep, const Term& t, int dest, std::uint32_t tag) {
  ep.send(dest, tag, print_term(t));
}

ReceivedTerm receive_term(Endpoint& ep, int source, std::int64_t tag) {
  MessageInfo info = ep.probe(source, tag);
  Envelope env = ep.receive(info.source, static_cast<std::int64_t>(info.tag));
  return {parse_payload(env.payload), env.source, env.tag};
}

void bcast_term_root(Endpoint& ep, const Term& t, int root) {
  if (ep.rank() != root)
    throw RoleError("rank " + std::to_string(ep.rank()) +
                    " is not the broadcast root " + std::to_string(root));
  std::string text = print_term(t);
  std::string header;
  put_u64_be(header, text.size());
  ep.broadcast_root(header);
  ep.broadcast_root(text);
}

Term bcast_term_recv(Endpoint& ep, int root) {
  if (ep.rank() == root)
    throw RoleError("the broadcast root must call bcast_term_root");
  std::string header = ep.broadcast_recv(root);
  if (header.size() != 8) throw DecodeError("broadcast length prefix must be 8 bytes");
  std::uint64_t expected =
      get_u64_be(reinterpret_cast<const unsigned char*>(header.data()));
  std::string text = ep.broadcast_recv(root);
  if (text.size() != expected)
    throw DecodeError("broadcast length prefix " + std::to_string(expected) +
                      " does not match payload size " + std::to_string(text.size()));
  return parse_payload(text);
}

}  // namespace parcover
