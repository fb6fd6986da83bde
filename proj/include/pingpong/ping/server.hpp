#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pingpong/crypto.hpp"
#include "pingpong/ping/aggregate.hpp"
#include "pingpong/protocol/params.hpp"
#include "pingpong/protocol/wire.hpp"
#include "pingpong/router.hpp"

namespace pingpong::ping {

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Registered {
  ClientId id;
  Label label{};
  crypto::SymKey session{};
};

// Connected clients of one Ping node. Iteration order is registration order,
// which is public.
class ClientRegistry {
 public:
  void add(ClientId id, const Label& label, const crypto::SymKey& session) {
    if (label == kNullLabel) throw RegistryError("the all-zero label is reserved");
    if (by_label_.count(label)) throw RegistryError("duplicate label in registry");
    if (by_id_.count(id)) throw RegistryError("client registered twice");
    by_id_[id] = clients_.size();
    by_label_[label] = id;
    clients_.push_back(Registered{id, label, session});
  }

  void remove(ClientId id) {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return;
    clients_.erase(clients_.begin() + static_cast<std::ptrdiff_t>(it->second));
    by_id_.clear();
    by_label_.clear();
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      by_id_[clients_[i].id] = i;
      by_label_[clients_[i].label] = clients_[i].id;
    }
  }

  const Registered* find(ClientId id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &clients_[it->second];
  }
  std::optional<ClientId> owner_of(const Label& label) const {
    auto it = by_label_.find(label);
    if (it == by_label_.end()) return std::nullopt;
    return it->second;
  }
  const std::vector<Registered>& clients() const { return clients_; }
  std::size_t size() const { return clients_.size(); }

 private:
  std::vector<Registered> clients_;
  std::map<ClientId, std::size_t> by_id_;
  std::map<Label, ClientId> by_label_;
};

struct PingMetrics {
  std::uint64_t packets_in = 0;
  std::uint64_t digests_out = 0;
  std::uint64_t malformed = 0;
  std::uint64_t rounds = 0;
  double last_round_ms = 0;
};

// Single-node Ping service: unseal, substitute blanks, aggregate, emit one
// digest per registered client.
class PingServer {
 public:
  PingServer(protocol::Params params, crypto::KeyPair service, Rng rng)
      : params_(params), service_(service), rng_(std::move(rng)) {}

  std::optional<ClientId> accept_hello(const protocol::Frame& hello) {
    auto h = protocol::open_hello(service_, hello);
    if (!h) return std::nullopt;
    registry_.add(h->client, h->label, h->session_key);
    return h->client;
  }

  ClientRegistry& registry() { return registry_; }
  const ClientRegistry& registry() const { return registry_; }
  const crypto::KeyPair& service_key() const { return service_; }

  // One packet per registered client, in registry order. Missing, stale,
  // undecryptable or malformed notifications become idle blanks.
  std::vector<AggPacket> ingest(std::uint64_t round, const std::map<ClientId, protocol::Frame>& notfs,
                                AccessTrace* trace = nullptr) {
    std::vector<AggPacket> pkts;
    pkts.reserve(registry_.size());
    for (std::size_t i = 0; i < registry_.size(); ++i) {
      const auto& c = registry_.clients()[i];
      AggPacket p = blank_packet();
      auto it = notfs.find(c.id);
      if (it != notfs.end()) {
        ++metrics_.packets_in;
        if (auto tp = open_token(round, c.session, it->second)) {
          p.label = tp->label;
          p.vec = tp->vec;
        } else {
          ++metrics_.malformed;
        }
      }
      pkts.push_back(p);
      obliv::note(trace, OpKind::scan_read, i);
    }
    return pkts;
  }

  std::map<ClientId, protocol::Frame> round(std::uint64_t r, const std::map<ClientId, protocol::Frame>& notfs,
                                            AccessTrace* trace = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    auto pkts = ingest(r, notfs, trace);
    for (std::size_t i = 0; i < registry_.size(); ++i) pkts.push_back(carrier_for(registry_.clients()[i].label, i));
    const std::size_t carriers = oblivious_aggregate(pkts, trace);
    std::map<ClientId, protocol::Frame> out;
    for (std::size_t i = 0; i < carriers; ++i) {
      const auto& c = registry_.clients()[pkts[i].origin];
      out.emplace(c.id, make_digest(c.session, r, pkts[i].vec));
    }
    metrics_.digests_out += out.size();
    ++metrics_.rounds;
    metrics_.last_round_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  protocol::Frame make_digest(const crypto::SymKey& session, std::uint64_t r, const NotfVec& vec) {
    Bytes b(protocol::kVecBytes);
    protocol::put_vec(b.data(), vec);
    return protocol::seal_frame(session, protocol::Kind::digest, r, b, rng_);
  }

  const PingMetrics& metrics() const { return metrics_; }
  Rng& rng() { return rng_; }

 private:
  std::optional<protocol::TokenPlain> open_token(std::uint64_t round, const crypto::SymKey& session,
                                                 const protocol::Frame& f) const {
    if (f.kind != protocol::Kind::notf || f.round != round) return std::nullopt;
    auto sealed = protocol::open_notf(session, f);
    if (!sealed) return std::nullopt;
    auto plain = crypto::unseal(*sealed, service_);
    if (!plain) return std::nullopt;
    return protocol::TokenPlain::decode(*plain);
  }

  protocol::Params params_;
  crypto::KeyPair service_;
  Rng rng_;
  ClientRegistry registry_;
  PingMetrics metrics_;
};

// ---- scaled deployment: entry and backend halves ----

// Entry side: dedup labels, then route each packet to the backend owning
// hash(label) mod B, padded to Z per backend.
inline std::vector<std::vector<AggPacket>> entry_route(std::vector<AggPacket> pkts, std::size_t B, std::size_t Z,
                                                       Rng& rng, AccessTrace* trace = nullptr) {
  entry_dedup(pkts, rng, trace);
  std::vector<Word> bin(pkts.size()), cls(pkts.size());
  for (std::size_t i = 0; i < pkts.size(); ++i) {
    bin[i] = router::bin_of_label(pkts[i].label, B);
    cls[i] = obliv::obl_choose(pkts[i].is_dummy, router::kDummy, router::kReal);
    pkts[i].backend_bin = bin[i];
  }
  AggPacket filler = blank_packet();
  filler.is_dummy = 1;
  return router::oblivious_bin_assign(pkts, bin, cls, B, Z, filler, trace);
}

// Backend side: aggregate every routed packet into this backend's carriers.
inline std::vector<AggPacket> backend_aggregate(std::vector<AggPacket> routed, const std::vector<AggPacket>& carriers,
                                                AccessTrace* trace = nullptr) {
  routed.insert(routed.end(), carriers.begin(), carriers.end());
  const std::size_t n = oblivious_aggregate(routed, trace);
  routed.resize(n);
  return routed;
}

}  // namespace pingpong::ping
