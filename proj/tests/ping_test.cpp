#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "pingpong/ping/server.hpp"
#include "sim/simulators.hpp"

namespace {

using namespace pingpong;
using namespace pingpong::ping;
using protocol::Frame;
using protocol::NotfVec;

Label random_label(Rng& rng) { return Label{rng() | 1, rng(), rng(), rng()}; }

AggPacket notification(const Label& l, std::size_t bit) {
  AggPacket p;
  p.label = l;
  p.vec = protocol::one_hot(bit);
  return p;
}

// Naive group-by-label OR.
std::map<Label, NotfVec> oracle_or(const std::vector<AggPacket>& notfs) {
  std::map<Label, NotfVec> out;
  for (const auto& p : notfs) {
    auto& v = out[p.label];
    for (std::size_t w = 0; w < v.size(); ++w) v[w] |= p.vec[w];
  }
  return out;
}

TEST(Aggregate, CarriersOnly) {
  Rng rng(1);
  std::vector<AggPacket> pkts;
  for (int i = 0; i < 5; ++i) pkts.push_back(carrier_for(random_label(rng), i));
  EXPECT_EQ(oblivious_aggregate(pkts), 5U);
  std::set<Word> origins;
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(pkts[i].is_carrier, 1U);
    EXPECT_EQ(protocol::popcount(pkts[i].vec), 0U);
    origins.insert(pkts[i].origin);
  }
  EXPECT_EQ(origins.size(), 5U);
}

TEST(Aggregate, SingleNotificationReachesCarrier) {
  Rng rng(2);
  const auto l = random_label(rng);
  std::vector<AggPacket> pkts{carrier_for(l, 0), notification(l, 9)};
  ASSERT_EQ(oblivious_aggregate(pkts), 1U);
  EXPECT_EQ(pkts[0].vec, protocol::one_hot(9));
}

TEST(Aggregate, PermutationInvariantOutputAndTrace) {
  Rng rng(3);
  std::vector<Label> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(random_label(rng));
  std::vector<AggPacket> base;
  for (int i = 0; i < 20; ++i) base.push_back(carrier_for(labels[i], i));
  for (int i = 0; i < 40; ++i) base.push_back(notification(labels[rng.uniform(20)], rng.uniform(512)));
  for (int i = 0; i < 4; ++i) base.push_back(blank_packet());

  std::vector<AggPacket> first = base;
  AccessTrace t0;
  const auto n0 = oblivious_aggregate(first, &t0);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = base;
    std::shuffle(p.begin(), p.end(), rng);
    AccessTrace t;
    ASSERT_EQ(oblivious_aggregate(p, &t), n0);
    ASSERT_EQ(t.bytes(), t0.bytes());
    for (std::size_t i = 0; i < n0; ++i) {
      ASSERT_EQ(p[i].label, first[i].label);
      ASSERT_EQ(p[i].vec, first[i].vec);
    }
  }
}

TEST(Aggregate, MatchesOracleAndSimulator) {
  Rng rng(4);
  for (std::size_t n : {64UL, 257UL}) {
    AccessTrace ref;
    sim::sim_aggregate(ref, n);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t carriers = 1 + rng.uniform(n / 2);
      std::vector<Label> labels;
      std::vector<AggPacket> pkts, notfs;
      for (std::size_t i = 0; i < carriers; ++i) {
        labels.push_back(random_label(rng));
        pkts.push_back(carrier_for(labels.back(), i));
      }
      while (pkts.size() < n) {
        auto p = rng.uniform(4) == 0 ? blank_packet() : notification(labels[rng.uniform(carriers)], rng.uniform(512));
        pkts.push_back(p);
        if (p.label != kNullLabel) notfs.push_back(p);
      }
      std::shuffle(pkts.begin(), pkts.end(), rng);
      const auto expected = oracle_or(notfs);
      AccessTrace t;
      ASSERT_EQ(oblivious_aggregate(pkts, &t), carriers);
      ASSERT_EQ(t.bytes(), ref.bytes());
      for (std::size_t i = 0; i < carriers; ++i) {
        auto it = expected.find(pkts[i].label);
        const NotfVec want = it == expected.end() ? NotfVec{} : it->second;
        ASSERT_EQ(pkts[i].vec, want);
      }
    }
  }
}

TEST(Dedup, DistinctLabelsUntouched) {
  Rng rng(5);
  std::vector<AggPacket> pkts;
  for (int i = 0; i < 10; ++i) pkts.push_back(notification(random_label(rng), i));
  entry_dedup(pkts, rng);
  for (const auto& p : pkts) EXPECT_EQ(p.is_dummy, 0U);
}

TEST(Dedup, GroupCollapsesToOneSurvivor) {
  Rng rng(6);
  const auto l = random_label(rng);
  std::vector<AggPacket> pkts{notification(l, 1), notification(random_label(rng), 2), notification(l, 3),
                              notification(l, 5)};
  entry_dedup(pkts, rng);
  int survivors = 0, dummies = 0;
  for (const auto& p : pkts) {
    if (p.label == l) {
      ++survivors;
      NotfVec want = protocol::one_hot(1);
      protocol::set_bit(want, 3);
      protocol::set_bit(want, 5);
      EXPECT_EQ(p.vec, want);
      EXPECT_EQ(p.is_dummy, 0U);
    }
    dummies += static_cast<int>(p.is_dummy);
  }
  EXPECT_EQ(survivors, 1);
  EXPECT_EQ(dummies, 2);
}

TEST(Dedup, NonDummyLabelsUniqueOnRandomInput) {
  Rng rng(7);
  std::vector<Label> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(random_label(rng));
  std::vector<AggPacket> pkts;
  for (int i = 0; i < 300; ++i) pkts.push_back(notification(pool[rng.uniform(30)], rng.uniform(512)));
  const auto expected = oracle_or(pkts);
  entry_dedup(pkts, rng);
  std::set<Label> seen;
  for (const auto& p : pkts) {
    if (p.is_dummy) continue;
    ASSERT_TRUE(seen.insert(p.label).second);
    ASSERT_EQ(p.vec, expected.at(p.label));
  }
  EXPECT_EQ(seen.size(), expected.size());
  EXPECT_EQ(pkts.size(), 300U);
}

TEST(Registry, RejectsNullAndDuplicateLabels) {
  ClientRegistry r;
  crypto::SymKey k{};
  EXPECT_THROW(r.add(ClientId{1}, kNullLabel, k), RegistryError);
  r.add(ClientId{1}, Label{1, 2, 3, 4}, k);
  EXPECT_THROW(r.add(ClientId{2}, Label{1, 2, 3, 4}, k), RegistryError);
  EXPECT_THROW(r.add(ClientId{1}, Label{5, 2, 3, 4}, k), RegistryError);
  EXPECT_EQ(r.size(), 1U);
  r.remove(ClientId{1});
  EXPECT_EQ(r.size(), 0U);
}

// A small deployment: one server, clients with session keys and labels.
struct Fixture {
  Rng rng{8};
  crypto::KeyPair service = crypto::KeyPair::generate(rng);
  PingServer server{protocol::Params{}, service, Rng(9)};
  std::vector<Registered> clients;

  explicit Fixture(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      Registered c{ClientId{100 + i}, random_label(rng), crypto::random_key(rng)};
      const auto hello = protocol::make_hello(service.pk, protocol::HelloPlain{c.session, c.id, c.label}, rng);
      EXPECT_EQ(server.accept_hello(protocol::decode(protocol::encode(hello))), c.id);
      clients.push_back(c);
    }
  }

  Bytes sealed(const NotfVec& v, const Label& l) {
    return crypto::seal(protocol::TokenPlain{v, l}.encode(), service.pk, rng);
  }
  Frame notf(std::size_t from, std::uint64_t r, const Bytes& sealed_token) {
    return protocol::make_notf(clients[from].session, r, sealed_token, rng);
  }
  Frame idle(std::size_t from, std::uint64_t r) { return notf(from, r, sealed(NotfVec{}, kNullLabel)); }

  NotfVec digest_of(std::size_t who, const std::map<ClientId, Frame>& out, std::uint64_t r) {
    const auto& f = out.at(clients[who].id);
    EXPECT_EQ(f.round, r);
    auto pt = protocol::open_frame(clients[who].session, f);
    EXPECT_TRUE(pt.has_value());
    return protocol::get_vec(pt->data());
  }
};

TEST(PingRound, AllIdleGivesZeroDigests) {
  Fixture fx(6);
  std::map<ClientId, Frame> in;
  for (std::size_t i = 0; i < 6; ++i) in[fx.clients[i].id] = fx.idle(i, 1);
  const auto out = fx.server.round(1, in);
  ASSERT_EQ(out.size(), 6U);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(fx.digest_of(i, out, 1), NotfVec{});
}

TEST(PingRound, TwoSendersOneRecipient) {
  Fixture fx(3);  // A=0, B=1, C=2
  const auto b_label = fx.clients[1].label;
  std::map<ClientId, Frame> in;
  in[fx.clients[0].id] = fx.notf(0, 4, fx.sealed(protocol::one_hot(7), b_label));
  in[fx.clients[2].id] = fx.notf(2, 4, fx.sealed(protocol::one_hot(2), b_label));
  in[fx.clients[1].id] = fx.idle(1, 4);
  const auto out = fx.server.round(4, in);
  NotfVec want = protocol::one_hot(7);
  protocol::set_bit(want, 2);
  EXPECT_EQ(fx.digest_of(1, out, 4), want);
  EXPECT_EQ(fx.digest_of(0, out, 4), NotfVec{});
  EXPECT_EQ(fx.digest_of(2, out, 4), NotfVec{});
}

TEST(PingRound, MissingStaleAndTamperedBecomeBlanks) {
  Fixture fx(4);
  const auto target = fx.clients[3].label;
  std::map<ClientId, Frame> in;
  in[fx.clients[0].id] = fx.notf(0, 6, fx.sealed(protocol::one_hot(1), target));  // stale round
  auto tampered = fx.notf(1, 7, fx.sealed(protocol::one_hot(2), target));
  tampered.body[50] ^= 1;
  in[fx.clients[1].id] = tampered;
  // client 2 sends nothing; client 3 sends with client 0's session key
  in[fx.clients[3].id] = fx.notf(0, 7, fx.sealed(protocol::one_hot(3), target));
  const auto out = fx.server.round(7, in);
  ASSERT_EQ(out.size(), 4U);
  EXPECT_EQ(fx.digest_of(3, out, 7), NotfVec{});
  EXPECT_EQ(fx.server.metrics().malformed, 3U);
}

TEST(PingRound, RandomWorkloadsMatchOracleWithFixedTrace) {
  Fixture fx(40);
  AccessTrace ref;
  sim::sim_ping_round(ref, 40);
  for (std::uint64_t r = 1; r <= 50; ++r) {
    std::map<ClientId, Frame> in;
    std::map<std::size_t, NotfVec> expected;
    for (std::size_t i = 0; i < 40; ++i) {
      if (fx.rng.uniform(3) == 0) {
        in[fx.clients[i].id] = fx.idle(i, r);
        continue;
      }
      const std::size_t to = fx.rng.uniform(40);
      const std::size_t bit = fx.rng.uniform(512);
      protocol::set_bit(expected[to], bit);
      in[fx.clients[i].id] = fx.notf(i, r, fx.sealed(protocol::one_hot(bit), fx.clients[to].label));
    }
    AccessTrace t;
    const auto out = fx.server.round(r, in, &t);
    ASSERT_EQ(t.bytes(), ref.bytes()) << "round " << r;
    for (std::size_t i = 0; i < 40; ++i) ASSERT_EQ(fx.digest_of(i, out, r), expected[i]);
  }
}

TEST(PingRound, ThousandNotificationsMatchOracle) {
  Fixture fx(1000);
  std::map<ClientId, Frame> in;
  std::map<std::size_t, NotfVec> expected;
  for (std::size_t i = 0; i < 1000; ++i) {
    const std::size_t to = fx.rng.uniform(1000);
    const std::size_t bit = fx.rng.uniform(512);
    protocol::set_bit(expected[to], bit);
    in[fx.clients[i].id] = fx.notf(i, 1, fx.sealed(protocol::one_hot(bit), fx.clients[to].label));
  }
  const auto out = fx.server.round(1, in);
  for (std::size_t i = 0; i < 1000; ++i) ASSERT_EQ(fx.digest_of(i, out, 1), expected[i]);
}

TEST(ScaledPing, EntryRouteThenBackendAggregateMatchesOracle) {
  Rng rng(10);
  const std::size_t B = 4, clients = 200;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < clients; ++i) labels.push_back(random_label(rng));
  // Two entries, each with half the clients' notifications.
  std::vector<AggPacket> all_notfs;
  std::vector<std::vector<AggPacket>> per_entry(2);
  for (std::size_t i = 0; i < clients; ++i) {
    auto p = rng.uniform(5) == 0 ? blank_packet() : notification(labels[rng.uniform(clients)], rng.uniform(512));
    per_entry[i % 2].push_back(p);
    if (p.label != kNullLabel) all_notfs.push_back(p);
  }
  const auto expected = oracle_or(all_notfs);
  std::vector<std::vector<AggPacket>> at_backend(B);
  for (auto& e : per_entry) {
    const std::size_t Z = router::compute_bound(e.size(), B);
    auto subs = entry_route(e, B, Z, rng);
    for (std::size_t b = 0; b < B; ++b) at_backend[b].insert(at_backend[b].end(), subs[b].begin(), subs[b].end());
  }
  std::size_t seen = 0;
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<AggPacket> carriers;
    for (std::size_t i = 0; i < clients; ++i)
      if (router::bin_of_label(labels[i], B) == b) carriers.push_back(carrier_for(labels[i], i));
    const auto out = backend_aggregate(at_backend[b], carriers);
    ASSERT_EQ(out.size(), carriers.size());
    for (const auto& c : out) {
      auto it = expected.find(c.label);
      ASSERT_EQ(c.vec, it == expected.end() ? NotfVec{} : it->second);
      ++seen;
    }
  }
  EXPECT_EQ(seen, clients);
}

}  // namespace
