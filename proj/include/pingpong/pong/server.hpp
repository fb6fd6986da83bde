#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>

#include "pingpong/crypto.hpp"
#include "pingpong/pong/store.hpp"
#include "pingpong/protocol/wire.hpp"
#include "pingpong/router.hpp"

namespace pingpong::pong {

struct StoredMsg {
  Word sender = 0;
  protocol::Inner inner{};
};

using MsgStore = PongStore<StoredMsg>;

struct PongMetrics {
  std::uint64_t writes = 0;
  std::uint64_t reads = 0;
  std::uint64_t malformed = 0;
  std::uint64_t rounds = 0;
  double last_round_ms = 0;
};

// Records moved between Pong entry and storage nodes.
struct RoutedRead {
  Word key = 0;
  Word real = 0;
  Word origin = router::kNoOrigin;
};

struct RoutedResult {
  Word origin = router::kNoOrigin;
  Word found = 0;
  StoredMsg msg{};
};

using WriteEntry = MsgStore::WriteEntry;

// Turns a session frame into a store write; anything unusable becomes a
// dummy write so the batch size stays equal to the number of clients.
inline WriteEntry write_from_frame(const crypto::SymKey& session, std::uint64_t round, const protocol::Frame* f,
                                   std::uint64_t* malformed) {
  WriteEntry w;
  w.dummy = 1;
  if (f == nullptr) return w;
  std::optional<protocol::MsgPlain> m;
  if (f->kind == protocol::Kind::msg && f->round == round)
    if (auto pt = protocol::open_frame(session, *f)) m = protocol::MsgPlain::decode(*pt);
  if (!m) {
    ++*malformed;
    return w;
  }
  w.key = m->token.value;
  w.dummy = m->dummy ? 1 : 0;
  w.value = StoredMsg{m->sender.value, m->inner};
  return w;
}

inline RoutedRead read_from_frame(const crypto::SymKey& session, std::uint64_t round, const protocol::Frame* f,
                                  std::uint64_t* malformed) {
  RoutedRead r;
  if (f == nullptr) return r;
  std::optional<protocol::ReadPlain> rp;
  if (f->kind == protocol::Kind::read && f->round == round)
    if (auto pt = protocol::open_frame(session, *f)) rp = protocol::ReadPlain::decode(*pt);
  if (!rp) {
    ++*malformed;
    return r;
  }
  r.key = rp->token.value;
  r.real = rp->dummy ? 0 : 1;
  return r;
}

inline protocol::Frame response_frame(const crypto::SymKey& session, std::uint64_t round, Word found,
                                      const StoredMsg& msg, Rng& rng) {
  protocol::ResponsePlain rp{found != 0, ClientId{msg.sender}, msg.inner};
  return protocol::seal_frame(session, protocol::Kind::response, round, rp.encode(), rng);
}

// Single-node Pong service: each round writes one entry per client and then
// serves one read per client.
class PongServer {
 public:
  PongServer(StoreOptions store, crypto::KeyPair service, Rng rng)
      : service_(service), rng_(std::move(rng)), store_(store, rng_.fork()) {}

  std::optional<ClientId> accept_hello(const protocol::Frame& hello) {
    auto h = protocol::open_hello(service_, hello);
    if (!h) return std::nullopt;
    if (sessions_.count(h->client)) return std::nullopt;
    sessions_[h->client] = h->session_key;
    return h->client;
  }

  void add_session(ClientId id, const crypto::SymKey& key) { sessions_[id] = key; }
  void remove_session(ClientId id) { sessions_.erase(id); }
  const std::map<ClientId, crypto::SymKey>& sessions() const { return sessions_; }

  std::map<ClientId, protocol::Frame> round(std::uint64_t r, const std::map<ClientId, protocol::Frame>& msgs,
                                            const std::map<ClientId, protocol::Frame>& reads,
                                            AccessTrace* write_trace = nullptr, AccessTrace* read_trace = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<WriteEntry> batch;
    std::vector<MsgStore::ReadEntry> req;
    std::vector<ClientId> order;
    for (const auto& [id, key] : sessions_) {
      auto m = msgs.find(id);
      auto rd = reads.find(id);
      batch.push_back(write_from_frame(key, r, m == msgs.end() ? nullptr : &m->second, &metrics_.malformed));
      const auto rr = read_from_frame(key, r, rd == reads.end() ? nullptr : &rd->second, &metrics_.malformed);
      req.push_back({obliv::obl_choose(rr.real, rr.key, rng_()), rr.real});
      order.push_back(id);
    }
    store_.obl_write(batch, write_trace);
    const auto res = store_.obl_read(req, read_trace);
    std::map<ClientId, protocol::Frame> out;
    for (std::size_t i = 0; i < order.size(); ++i)
      out.emplace(order[i], response_frame(sessions_.at(order[i]), r, res[i].found, res[i].value, rng_));
    metrics_.writes += batch.size();
    metrics_.reads += req.size();
    ++metrics_.rounds;
    metrics_.last_round_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  MsgStore& store() { return store_; }
  const PongMetrics& metrics() const { return metrics_; }

 private:
  crypto::KeyPair service_;
  Rng rng_;
  MsgStore store_;
  std::map<ClientId, crypto::SymKey> sessions_;
  PongMetrics metrics_;
};

// ---- scaled deployment: entry and storage halves ----

// Entry: dummy writes get fresh random keys, then every write is routed to
// the storage node owning hash(key) mod B, Z per node.
inline std::vector<std::vector<WriteEntry>> entry_route_writes(std::vector<WriteEntry> batch, std::size_t B,
                                                               std::size_t Z, Rng& rng, AccessTrace* trace = nullptr) {
  std::vector<Word> bin(batch.size()), cls(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch[i].key = obliv::obl_choose(batch[i].dummy, rng(), batch[i].key);
    bin[i] = router::bin_of_word(batch[i].key, B);
    cls[i] = obliv::obl_choose(batch[i].dummy, router::kDummy, router::kReal);
  }
  WriteEntry filler;
  filler.dummy = 1;
  return router::oblivious_bin_assign(batch, bin, cls, B, Z, filler, trace);
}

inline std::vector<std::vector<RoutedRead>> entry_route_reads(std::vector<RoutedRead> reqs, std::size_t B,
                                                              std::size_t Z, Rng& rng, AccessTrace* trace = nullptr) {
  std::vector<Word> bin(reqs.size()), cls(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    reqs[i].origin = i;
    reqs[i].key = obliv::obl_choose(reqs[i].real, reqs[i].key, rng());
    bin[i] = router::bin_of_word(reqs[i].key, B);
    cls[i] = obliv::obl_choose(reqs[i].real, router::kReal, router::kDummy);
  }
  return router::oblivious_bin_assign(reqs, bin, cls, B, Z, RoutedRead{}, trace);
}

// Storage node: serve every routed read, keeping the origin tag.
inline std::vector<RoutedResult> storage_read(MsgStore& store, const std::vector<RoutedRead>& reqs,
                                              AccessTrace* trace = nullptr) {
  std::vector<MsgStore::ReadEntry> r(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) r[i] = {reqs[i].key, reqs[i].real};
  const auto res = store.obl_read(r, trace);
  std::vector<RoutedResult> out(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) out[i] = RoutedResult{reqs[i].origin, res[i].found, res[i].value};
  return out;
}

// Entry: put gathered results back in request order.
inline std::vector<RoutedResult> entry_gather(std::vector<RoutedResult> results, std::size_t n,
                                              AccessTrace* trace = nullptr) {
  return router::restore_order(std::move(results), [](const RoutedResult& r) { return r.origin; }, n, trace);
}

}  // namespace pingpong::pong
