#pragma once

#include <chrono>
#include <optional>
#include <sstream>
#include <string>

#include "pingpong/net/node.hpp"
#include "pingpong/ping/server.hpp"
#include "pingpong/pong/server.hpp"

namespace pingpong::net {

inline NodeHooks ping_hooks(ping::PingServer& s) {
  NodeHooks h;
  h.hello = [&s](const protocol::Frame& f) -> std::optional<std::pair<ClientId, crypto::SymKey>> {
    auto id = s.accept_hello(f);
    if (!id) return std::nullopt;
    return std::pair{*id, s.registry().find(*id)->session};
  };
  h.round = [&s](std::uint64_t r, const RoundInbox& in) {
    static const std::map<ClientId, protocol::Frame> none;
    auto it = in.find(protocol::Kind::notf);
    RoundOutput out;
    for (auto& [id, f] : s.round(r, it == in.end() ? none : it->second)) out[id].push_back(std::move(f));
    return out;
  };
  h.disconnect = [&s](ClientId id) { s.registry().remove(id); };
  return h;
}

inline NodeHooks pong_hooks(pong::PongServer& s) {
  NodeHooks h;
  h.hello = [&s](const protocol::Frame& f) -> std::optional<std::pair<ClientId, crypto::SymKey>> {
    auto id = s.accept_hello(f);
    if (!id) return std::nullopt;
    return std::pair{*id, s.sessions().at(*id)};
  };
  h.round = [&s](std::uint64_t r, const RoundInbox& in) {
    static const std::map<ClientId, protocol::Frame> none;
    auto m = in.find(protocol::Kind::msg);
    auto q = in.find(protocol::Kind::read);
    RoundOutput out;
    for (auto& [id, f] : s.round(r, m == in.end() ? none : m->second, q == in.end() ? none : q->second))
      out[id].push_back(std::move(f));
    return out;
  };
  h.disconnect = [&s](ClientId id) { s.remove_session(id); };
  return h;
}

inline std::string ping_metrics_text(const ping::PingMetrics& m, const NodeCounters& c) {
  std::ostringstream o;
  o << "packets_in " << m.packets_in << "\n"
    << "digests_out " << m.digests_out << "\n"
    << "malformed " << m.malformed << "\n"
    << "rounds " << m.rounds << "\n"
    << "round_ms " << m.last_round_ms << "\n"
    << "stale_frames " << c.stale.load() << "\n";
  return o.str();
}

inline std::string pong_metrics_text(const pong::PongMetrics& m, const pong::StoreStats& st, const NodeCounters& c) {
  std::ostringstream o;
  o << "writes " << m.writes << "\n"
    << "reads " << m.reads << "\n"
    << "malformed " << m.malformed << "\n"
    << "rounds " << m.rounds << "\n"
    << "round_ms " << m.last_round_ms << "\n"
    << "merges " << st.merges << "\n"
    << "expired_batches " << st.expired_batches << "\n"
    << "stale_frames " << c.stale.load() << "\n";
  return o.str();
}

}  // namespace pingpong::net
