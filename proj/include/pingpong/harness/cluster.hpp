#pragma once

#include <sodium.h>

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pingpong/client.hpp"
#include "pingpong/ping/server.hpp"
#include "pingpong/pong/server.hpp"
#include "pingpong/router.hpp"

namespace pingpong::harness {

namespace pr = pingpong::protocol;
using obliv::Word;

struct ClusterConfig {
  std::size_t clients = 200;
  std::size_t rounds = 50;
  std::size_t backends = 1;  // 1: single Ping and Pong server
  std::size_t entries = 2;   // entry nodes when backends > 1
  std::uint64_t seed = 1;
  double msg_prob = 0.2;     // chance per client per round of queueing a message
  std::size_t friends = 4;   // friendships initiated per client
  double round_ms = 1000;
  double hop_rtt_ms = 100;
  std::size_t max_drain = 0;  // extra quiet rounds to flush queues; 0 = rounds
  pr::Params params = pr::Params{};
};

struct RoundCounts {
  std::uint64_t round = 0;
  std::size_t notf = 0, msg = 0, read = 0, digest = 0, response = 0;
  std::size_t clients = 0;
  std::size_t violations = 0;
};

struct SentRecord {
  ClientId from, to;
  std::uint64_t queued_round = 0;
  std::string text;
};

struct ClusterResult {
  std::size_t rounds_run = 0;
  std::vector<RoundCounts> per_round;
  std::vector<std::string> violations;
  std::vector<SentRecord> sent;
  std::map<ClientId, std::vector<client::Delivered>> inboxes;
  std::size_t delivered = 0, missing = 0, duplicated = 0, cross = 0, unexpected = 0;
  std::size_t late = 0;  // delivered more than two rounds after going on the wire
  std::vector<double> latencies_s;
  std::string fingerprint;
  double wall_ms = 0;

  bool uniform() const {
    for (const auto& r : per_round)
      if (r.violations) return false;
    return true;
  }
  bool delivery_ok() const { return missing == 0 && duplicated == 0 && cross == 0 && unexpected == 0; }
  bool ok() const { return uniform() && delivery_ok() && violations.empty(); }
};

inline Label sim_label(Rng& rng) {
  Label l;
  do {
    for (auto& w : l) w = rng();
  } while (l == kNullLabel);
  return l;
}

// Hex digest of every inbox, for differential and determinism checks.
inline std::string inbox_fingerprint(const std::map<ClientId, std::vector<client::Delivered>>& inboxes) {
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, 32);
  std::uint8_t buf[8];
  auto feed_u64 = [&](std::uint64_t v) {
    put_u64_be(buf, v);
    crypto_generichash_update(&st, buf, 8);
  };
  for (const auto& [id, box] : inboxes) {
    feed_u64(id.value);
    feed_u64(box.size());
    for (const auto& d : box) {
      feed_u64(d.round);
      feed_u64(d.from.value);
      feed_u64(d.text.size());
      crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(d.text.data()), d.text.size());
    }
  }
  std::array<std::uint8_t, 32> out;
  crypto_generichash_final(&st, out.data(), out.size());
  return crypto::to_hex(out);
}

namespace detail {

// All nodes of one deployment, driven round by round.
class Deployment {
 public:
  Deployment(const ClusterConfig& cfg, const crypto::KeyPair& ping_kp, const crypto::KeyPair& pong_kp, Rng& rng)
      : cfg_(cfg), B_(cfg.backends), E_(cfg.backends > 1 ? std::max<std::size_t>(cfg.entries, 1) : 1) {
    for (std::size_t e = 0; e < E_; ++e) {
      ping_entries_.push_back(std::make_unique<ping::PingServer>(cfg.params, ping_kp, rng.fork()));
      pong_entries_.push_back(std::make_unique<pong::PongServer>(entry_store(cfg), pong_kp, rng.fork()));
    }
    if (B_ > 1) {
      const std::size_t per_entry = (cfg.clients + E_ - 1) / E_;
      const std::size_t z = router::compute_bound(per_entry, B_, cfg.params.lambda);
      pong::StoreOptions o = store_options(cfg);
      o.c = z * E_;
      for (std::size_t b = 0; b < B_; ++b) backends_.push_back(std::make_unique<pong::MsgStore>(o, rng.fork()));
    }
    route_rng_ = rng.fork();
  }

  std::size_t entry_of(std::size_t g) const { return g % E_; }

  void join(std::size_t g, client::Client& c) {
    const auto e = entry_of(g);
    if (!ping_entries_[e]->accept_hello(c.ping_hello())) throw std::runtime_error("ping hello rejected");
    if (!pong_entries_[e]->accept_hello(c.pong_hello())) throw std::runtime_error("pong hello rejected");
    labels_.push_back(c.label());
    ids_.push_back(c.id());
  }

  std::map<ClientId, pr::Frame> ping_round(std::uint64_t r, const std::map<ClientId, pr::Frame>& notfs) {
    if (B_ == 1) return ping_entries_[0]->round(r, notfs);
    // Entries ingest and route; carriers live at the backend owning the label.
    std::vector<std::vector<ping::AggPacket>> at_backend(B_);
    for (std::size_t e = 0; e < E_; ++e) {
      auto pkts = ping_entries_[e]->ingest(r, notfs);
      const auto z = router::compute_bound(pkts.size(), B_, cfg_.params.lambda);
      auto sub = ping::entry_route(std::move(pkts), B_, z, route_rng_);
      for (std::size_t b = 0; b < B_; ++b) at_backend[b].insert(at_backend[b].end(), sub[b].begin(), sub[b].end());
    }
    std::map<ClientId, pr::Frame> out;
    for (std::size_t b = 0; b < B_; ++b) {
      std::vector<ping::AggPacket> carriers;
      for (std::size_t g = 0; g < labels_.size(); ++g)
        if (router::bin_of_label(labels_[g], B_) == b) carriers.push_back(ping::carrier_for(labels_[g], g));
      for (const auto& c : ping::backend_aggregate(std::move(at_backend[b]), carriers)) {
        const auto g = static_cast<std::size_t>(c.origin);
        auto& entry = *ping_entries_[entry_of(g)];
        const auto* reg = entry.registry().find(ids_[g]);
        if (reg) out.emplace(ids_[g], entry.make_digest(reg->session, r, c.vec));
      }
    }
    return out;
  }

  std::map<ClientId, pr::Frame> pong_round(std::uint64_t r, const std::map<ClientId, pr::Frame>& msgs,
                                           const std::map<ClientId, pr::Frame>& reads) {
    if (B_ == 1) return pong_entries_[0]->round(r, msgs, reads);
    std::uint64_t malformed = 0;
    std::vector<std::vector<std::vector<pong::WriteEntry>>> w(E_);
    std::vector<std::vector<std::vector<pong::RoutedRead>>> rd(E_);
    std::vector<std::vector<ClientId>> order(E_);
    for (std::size_t e = 0; e < E_; ++e) {
      std::vector<pong::WriteEntry> batch;
      std::vector<pong::RoutedRead> req;
      for (const auto& [id, key] : pong_entries_[e]->sessions()) {
        auto m = msgs.find(id);
        auto q = reads.find(id);
        batch.push_back(pong::write_from_frame(key, r, m == msgs.end() ? nullptr : &m->second, &malformed));
        req.push_back(pong::read_from_frame(key, r, q == reads.end() ? nullptr : &q->second, &malformed));
        order[e].push_back(id);
      }
      const auto z = router::compute_bound(batch.size(), B_, cfg_.params.lambda);
      w[e] = pong::entry_route_writes(std::move(batch), B_, z, route_rng_);
      rd[e] = pong::entry_route_reads(std::move(req), B_, z, route_rng_);
    }
    std::vector<std::vector<pong::RoutedResult>> back(E_);
    for (std::size_t b = 0; b < B_; ++b) {
      std::vector<pong::WriteEntry> all;
      for (std::size_t e = 0; e < E_; ++e) all.insert(all.end(), w[e][b].begin(), w[e][b].end());
      auto& store = *backends_[b];
      store.obl_write(all);
      for (std::size_t e = 0; e < E_; ++e) {
        auto res = pong::storage_read(store, rd[e][b]);
        back[e].insert(back[e].end(), res.begin(), res.end());
      }
    }
    std::map<ClientId, pr::Frame> out;
    for (std::size_t e = 0; e < E_; ++e) {
      const auto res = pong::entry_gather(std::move(back[e]), order[e].size());
      const auto& sessions = pong_entries_[e]->sessions();
      for (std::size_t i = 0; i < order[e].size(); ++i)
        out.emplace(order[e][i], pong::response_frame(sessions.at(order[e][i]), r, res[i].found, res[i].msg, route_rng_));
    }
    return out;
  }

 private:
  static pong::StoreOptions store_options(const ClusterConfig& cfg) {
    pong::StoreOptions o;
    o.k = cfg.params.k;
    o.m = cfg.params.m;
    o.N = cfg.params.N;
    o.Z = cfg.params.Z;
    o.eps = cfg.params.epsilon_oht;
    o.c = std::max<std::size_t>(cfg.clients, 1);
    o.background_merge = false;
    return o;
  }
  static pong::StoreOptions entry_store(const ClusterConfig& cfg) {
    auto o = store_options(cfg);
    if (cfg.backends > 1) o.c = 1;  // entries only hold sessions
    return o;
  }

  ClusterConfig cfg_;
  std::size_t B_, E_;
  std::vector<std::unique_ptr<ping::PingServer>> ping_entries_;
  std::vector<std::unique_ptr<pong::PongServer>> pong_entries_;
  std::vector<std::unique_ptr<pong::MsgStore>> backends_;
  std::vector<Label> labels_;
  std::vector<ClientId> ids_;
  Rng route_rng_{0};
};

inline bool frame_ok(const pr::Frame& f, pr::Kind k) { return f.kind == k && f.body.size() == pr::body_len(k); }

}  // namespace detail

// Full in-process protocol run over a virtual clock. The workload (friend
// graph and message schedule) is drawn from its own stream, so deployments
// with different B see the same workload for the same seed.
inline ClusterResult run_cluster_sim(const ClusterConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng master(cfg.seed);
  Rng workload = master.fork();
  Rng proto = master.fork();
  const auto ping_kp = crypto::KeyPair::generate(proto);
  const auto pong_kp = crypto::KeyPair::generate(proto);
  detail::Deployment dep(cfg, ping_kp, pong_kp, proto);

  ClusterResult res;
  std::vector<std::unique_ptr<client::Client>> clients;
  for (std::size_t g = 0; g < cfg.clients; ++g) {
    clients.push_back(std::make_unique<client::Client>(ClientId{g + 1}, sim_label(workload), cfg.params, ping_kp.pk,
                                                       pong_kp.pk, proto.fork()));
    dep.join(g, *clients.back());
  }

  std::vector<std::vector<std::size_t>> friends(cfg.clients);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < cfg.clients && cfg.clients > 1; ++a) {
    for (std::size_t j = 0; j < cfg.friends; ++j) {
      std::size_t b = workload.uniform(cfg.clients - 1);
      if (b >= a) ++b;
      const auto key = std::minmax(a, b);
      if (friends[a].size() >= cfg.params.max_friends || friends[b].size() >= cfg.params.max_friends) continue;
      if (!pairs.insert(key).second) continue;
      const auto sk = crypto::random_key(workload);
      auto [ia, ta] = clients[a]->add_friend(clients[b]->id(), sk);
      auto [ib, tb] = clients[b]->add_friend(clients[a]->id(), sk);
      clients[a]->set_friend_token(clients[b]->id(), tb);
      clients[b]->set_friend_token(clients[a]->id(), ta);
      friends[a].push_back(b);
      friends[b].push_back(a);
    }
  }

  std::map<std::pair<Word, Word>, std::multiset<std::string>> expected;
  std::map<std::string, std::uint64_t> left_at;  // text -> round it went on the wire
  const std::size_t drain = cfg.max_drain ? cfg.max_drain : cfg.rounds;
  const double round_s = cfg.round_ms / 1000.0;
  std::uint64_t r = 0;
  for (; r < cfg.rounds + drain; ++r) {
    if (r < cfg.rounds) {
      for (std::size_t a = 0; a < cfg.clients; ++a) {
        if (friends[a].empty() || workload.unit() >= cfg.msg_prob) continue;
        const auto b = friends[a][workload.uniform(friends[a].size())];
        SentRecord s{clients[a]->id(), clients[b]->id(), r,
                     "r" + std::to_string(r) + ":" + std::to_string(a + 1) + "->" + std::to_string(b + 1) + "#" +
                         std::to_string(res.sent.size())};
        clients[a]->send(s.to, s.text);
        expected[{s.from.value, s.to.value}].insert(s.text);
        res.sent.push_back(std::move(s));
      }
    } else {
      bool idle = true;
      for (const auto& c : clients) idle = idle && c->outbox_size() == 0 && c->pending_tokens() == 0;
      if (idle) break;
    }

    RoundCounts rc;
    rc.round = r;
    rc.clients = clients.size();
    std::map<ClientId, pr::Frame> notfs, msgs, reads;
    std::map<ClientId, std::string> outgoing;
    for (auto& c : clients) {
      const auto outbox_before = c->outbox_size();
      auto p = c->begin_round(r);
      const bool ok = detail::frame_ok(p.notf, pr::Kind::notf) && detail::frame_ok(p.msg, pr::Kind::msg) &&
                      detail::frame_ok(p.read, pr::Kind::read);
      rc.notf += p.notf.kind == pr::Kind::notf;
      rc.msg += p.msg.kind == pr::Kind::msg;
      rc.read += p.read.kind == pr::Kind::read;
      if (!ok) {
        ++rc.violations;
        res.violations.push_back("round " + std::to_string(r) + ": client " + std::to_string(c->id().value) +
                                 " emitted a malformed packet set");
      }
      if (p.sent_to && outbox_before == 0) res.violations.push_back("real message out of an empty outbox");
      if (p.sent_text) left_at[*p.sent_text] = r;
      notfs.emplace(c->id(), std::move(p.notf));
      msgs.emplace(c->id(), std::move(p.msg));
      reads.emplace(c->id(), std::move(p.read));
    }
    // Pong writes this round's messages before serving reads; Ping's digests
    // name tokens to fetch from the next round on.
    auto responses = dep.pong_round(r, msgs, reads);
    auto digests = dep.ping_round(r, notfs);
    for (auto& c : clients) {
      auto d = digests.find(c->id());
      auto q = responses.find(c->id());
      const bool got_d = d != digests.end() && detail::frame_ok(d->second, pr::Kind::digest);
      const bool got_q = q != responses.end() && detail::frame_ok(q->second, pr::Kind::response);
      rc.digest += d != digests.end();
      rc.response += q != responses.end();
      if (!got_d || !got_q) {
        ++rc.violations;
        res.violations.push_back("round " + std::to_string(r) + ": client " + std::to_string(c->id().value) +
                                 " missed its digest or response");
      }
      if (got_q) {
        c->on_response(q->second);
      } else {
        c->on_read_lost(r);
      }
      if (got_d) c->on_digest(d->second);
    }
    if (digests.size() != clients.size() || responses.size() != clients.size()) ++rc.violations;
    res.per_round.push_back(rc);
  }
  res.rounds_run = r;

  // Delivery oracle.
  std::map<std::string, const SentRecord*> by_text;
  for (const auto& s : res.sent) by_text[s.text] = &s;
  std::map<std::pair<Word, Word>, std::multiset<std::string>> got;
  for (const auto& c : clients) {
    auto box = c->inbox();
    for (const auto& d : box) {
      auto it = by_text.find(d.text);
      if (it == by_text.end()) {
        ++res.unexpected;
        continue;
      }
      if (it->second->to != c->id() || it->second->from != d.from) ++res.cross;
      got[{d.from.value, c->id().value}].insert(d.text);
      ++res.delivered;
      const double lat = static_cast<double>(d.round - it->second->queued_round) * round_s + cfg.hop_rtt_ms / 1000.0;
      res.latencies_s.push_back(lat);
      if (auto w = left_at.find(d.text); w != left_at.end() && d.round > w->second + 2) ++res.late;
    }
    res.inboxes[c->id()] = std::move(box);
  }
  for (const auto& [pair, want] : expected) {
    const auto& have = got[pair];
    for (const auto& t : want) {
      const auto h = have.count(t);
      if (h == 0) ++res.missing;
      if (h > 1) res.duplicated += h - 1;
    }
  }
  res.fingerprint = inbox_fingerprint(res.inboxes);
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace pingpong::harness
