#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "pingpong/harness/cluster.hpp"
#include "pingpong/harness/trace.hpp"

namespace {

using namespace pingpong;
using namespace pingpong::harness;

MsgTrace from_text(const std::string& s) {
  std::istringstream in(s);
  return parse_trace(in);
}

TEST(Trace, EmptyFileGivesEmptyTrace) {
  const auto t = from_text("");
  EXPECT_EQ(t.messages(), 0U);
  EXPECT_EQ(t.users(), 0U);
}

TEST(Trace, SortsByTimestampAndMapsIdsDensely) {
  const auto t = from_text("7 9 300\n9 7 100\n# comment\n\n7 12 200\n");
  ASSERT_EQ(t.messages(), 3U);
  EXPECT_EQ(t.users(), 3U);
  EXPECT_EQ(t.records[0].ts, 100);
  EXPECT_EQ(t.records[1].ts, 200);
  EXPECT_EQ(t.records[2].ts, 300);
  EXPECT_EQ(t.original_ids[t.records[0].sender], 9U);
  EXPECT_EQ(t.original_ids[t.records[1].receiver], 12U);
}

TEST(Trace, MalformedLineReportsLineNumber) {
  try {
    from_text("1 2 3\n1 2\n");
    FAIL() << "expected a parse error";
  } catch (const TraceParseError& e) {
    EXPECT_EQ(e.line(), 2U);
  }
  EXPECT_THROW(from_text("1 2 3 4\n"), TraceParseError);
  EXPECT_THROW(from_text("a b c\n"), TraceParseError);
}

TEST(Dial, IdleRecipientCostsConversationLatency) {
  const auto r = simulate_dial(from_text("1 2 1000\n"), 300);
  ASSERT_EQ(r.latencies.size(), 1U);
  EXPECT_DOUBLE_EQ(r.latencies[0], 0.5);
  EXPECT_EQ(r.conflict_fraction, 0.0);
}

TEST(Dial, SecondSenderWaitsAWindow) {
  const auto r = simulate_dial(from_text("1 3 0\n2 3 0\n"), 300);
  ASSERT_EQ(r.latencies.size(), 2U);
  EXPECT_GE(r.latencies[1], 300.0);
  EXPECT_DOUBLE_EQ(r.conflict_fraction, 0.5);
}

TEST(Dial, SameSenderJoinsOpenConversation) {
  const auto r = simulate_dial(from_text("1 3 0\n1 3 100\n1 3 299\n1 3 301\n"), 300);
  EXPECT_EQ(r.conversations, 2U);
  EXPECT_EQ(r.waited, 0U);
  for (double l : r.latencies) EXPECT_DOUBLE_EQ(l, 0.5);
}

TEST(Dial, ConflictsGrowWithWindow) {
  std::ostringstream s;
  Rng rng(3);
  for (int i = 0; i < 400; ++i) s << rng.uniform(20) << ' ' << rng.uniform(20) + 20 << ' ' << i * 20 << '\n';
  const auto t = from_text(s.str());
  double prev = -1;
  for (double w : {30.0, 60.0, 120.0, 300.0}) {
    const auto f = simulate_dial(t, w).conflict_fraction;
    EXPECT_GE(f, prev);
    prev = f;
  }
}

TEST(Notify, SingleMessageTakesProcessingLatency) {
  NotifyOptions o;
  o.jitter = false;
  const auto r = simulate_notify(from_text("1 2 50\n"), o);
  ASSERT_EQ(r.latencies.size(), 1U);
  EXPECT_DOUBLE_EQ(r.latencies[0], 3.0);
}

TEST(Notify, BurstToOneRecipientIsFetchedOnePerRound) {
  std::ostringstream s;
  for (int i = 0; i < 10; ++i) s << i + 1 << " 100 40\n";
  NotifyOptions o;
  o.jitter = false;
  o.round_s = 1.0;
  const auto r = simulate_notify(from_text(s.str()), o);
  // Independent queue oracle: all ten leave together, then one fetch per round.
  std::vector<double> want;
  for (int i = 0; i < 10; ++i) want.push_back(3.0 + i);
  auto got = r.latencies;
  std::sort(got.begin(), got.end());
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(got[i], want[i]);
}

TEST(Notify, AlignmentResidualStaysInsideOneRound) {
  std::ostringstream s;
  for (int i = 0; i < 500; ++i) s << i << ' ' << i + 1000 << ' ' << i * 7 << '\n';
  const auto r = simulate_notify(from_text(s.str()));
  for (double l : r.latencies) {
    EXPECT_GE(l, 3.0);
    EXPECT_LT(l, 3.5);
  }
  EXPECT_NEAR(r.avg_alignment, 0.25, 0.05);
}

ClusterConfig small_cluster() {
  ClusterConfig c;
  c.clients = 24;
  c.rounds = 12;
  c.msg_prob = 0.4;
  c.friends = 3;
  c.seed = 5;
  return c;
}

TEST(Cluster, TwoClientsExchange) {
  ClusterConfig c;
  c.clients = 2;
  c.rounds = 5;
  c.friends = 1;
  c.msg_prob = 0.5;
  const auto r = run_cluster_sim(c);
  EXPECT_TRUE(r.ok()) << (r.violations.empty() ? "" : r.violations.front());
  EXPECT_GT(r.sent.size(), 0U);
  EXPECT_EQ(r.delivered, r.sent.size());
  EXPECT_EQ(r.late, 0U);  // one sender per recipient: no fetch backlog
  for (const auto& rc : r.per_round) {
    EXPECT_EQ(rc.notf, 2U);
    EXPECT_EQ(rc.msg, 2U);
    EXPECT_EQ(rc.read, 2U);
    EXPECT_EQ(rc.digest, 2U);
    EXPECT_EQ(rc.response, 2U);
  }
}

TEST(Cluster, AllSentMessagesDeliveredExactlyOnce) {
  const auto r = run_cluster_sim(small_cluster());
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.delivered, r.sent.size());
  EXPECT_EQ(r.missing + r.duplicated + r.cross + r.unexpected, 0U);
}

TEST(Cluster, ScaledDeploymentDeliversIdentically) {
  auto c = small_cluster();
  const auto single = run_cluster_sim(c);
  c.backends = 4;
  c.entries = 2;
  const auto scaled = run_cluster_sim(c);
  EXPECT_TRUE(scaled.ok()) << (scaled.violations.empty() ? "" : scaled.violations.front());
  EXPECT_EQ(scaled.fingerprint, single.fingerprint);
  EXPECT_EQ(scaled.delivered, single.delivered);
}

TEST(Cluster, SameSeedIsBitReproducible) {
  const auto a = run_cluster_sim(small_cluster());
  const auto b = run_cluster_sim(small_cluster());
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  EXPECT_EQ(a.rounds_run, b.rounds_run);
  auto c = small_cluster();
  c.seed = 6;
  EXPECT_NE(run_cluster_sim(c).fingerprint, a.fingerprint);
}

}  // namespace
