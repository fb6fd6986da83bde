#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "common.hpp"
#include "httplib.h"
#include "pingpong/client.hpp"
#include "pingpong/harness/cluster.hpp"
#include "pingpong/harness/trace.hpp"
#include "pingpong/net/client_driver.hpp"
#include "pingpong/net/services.hpp"
#include "pingpong/ping/aggregate.hpp"
#include "pingpong/pong/oht.hpp"

namespace fs = std::filesystem;
using namespace pingpong;
using namespace pingpong::tool;
using obliv::AccessTrace;
using obliv::Word;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

// ---- keygen ----

struct KeygenOpts {
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_keygen(const KeygenOpts& o) {
  Rng rng = o.seed ? Rng(o.seed) : Rng();
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  const auto ping = crypto::KeyPair::generate(rng);
  const auto pong = crypto::KeyPair::generate(rng);
  write_raw(dir / "ping.key", ping.sk);
  write_raw(dir / "ping.pub", ping.pk);
  write_raw(dir / "pong.key", pong.sk);
  write_raw(dir / "pong.pub", pong.pk);

  // Two example clients that are friends with each other.
  std::array<Label, 2> labels;
  for (auto& l : labels) l = harness::sim_label(rng);
  const auto sk = crypto::random_key(rng);
  std::ofstream lab(dir / "labels.txt");
  for (int i = 0; i < 2; ++i) {
    std::array<std::uint8_t, 32> lb;
    put_label(lb.data(), labels[i]);
    lab << (i + 1) << ' ' << crypto::to_hex(lb) << '\n';
    // Client i+1 stores its friend's sealed token; the friend sits at slot 0
    // on both sides.
    const int other = 1 - i;
    const auto token = crypto::seal(protocol::TokenPlain{protocol::one_hot(0), labels[other]}.encode(), ping.pk, rng);
    std::ofstream f(dir / ("client" + std::to_string(i + 1) + ".friends"));
    f << (other + 1) << ' ' << crypto::to_hex(sk) << ' ' << crypto::to_hex(token) << " 0\n";
  }
  std::ofstream ini(dir / "example.ini");
  ini << "[node]\nping_key = " << (dir / "ping.key").string() << "\npong_key = " << (dir / "pong.key").string()
      << "\nping_pub = " << (dir / "ping.pub").string() << "\npong_pub = " << (dir / "pong.pub").string()
      << "\nping_addr = 127.0.0.1:7000\npong_addr = 127.0.0.1:7100\n";
  emit_json({{"out", o.out},
             {"ping_pub", crypto::to_hex(ping.pk)},
             {"pong_pub", crypto::to_hex(pong.pk)},
             {"files", {"ping.key", "ping.pub", "pong.key", "pong.pub", "labels.txt", "client1.friends",
                        "client2.friends", "example.ini"}}},
            "");
  return kExitOk;
}

// ---- servers ----

struct ServerOpts {
  std::string config;
  std::string listen;
  std::uint32_t round_ms = 0;
  bool entry = false, backend = false, storage = false;
  std::vector<std::string> peers;
  std::uint64_t rounds = 0;
  std::string metrics_listen;
};

class MetricsEndpoint {
 public:
  MetricsEndpoint(const std::string& addr, std::function<std::string()> body) {
    if (addr.empty()) return;
    const auto ep = net::parse_endpoint(addr);
    srv_.Get("/metrics", [body](const httplib::Request&, httplib::Response& res) { res.set_content(body(), "text/plain"); });
    thread_ = std::thread([this, ep] { srv_.listen(ep.host, ep.port); });
    spdlog::info("metrics on http://{}/metrics", addr);
  }
  ~MetricsEndpoint() {
    if (thread_.joinable()) {
      srv_.stop();
      thread_.join();
    }
  }

 private:
  httplib::Server srv_;
  std::thread thread_;
};

void run_node(net::RoundNode& node, std::uint64_t rounds) {
  node.start();
  spdlog::info("listening on port {}", node.port());
  while (!g_stop && (rounds == 0 || node.counters().rounds < rounds)) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  node.stop();
}

void reject_scaled_flags(const ServerOpts& o, const char* role) {
  if (o.entry || o.backend || o.storage || !o.peers.empty())
    throw UsageError(std::string(role) +
                     ": networked entry/backend roles are not available in this build; the scaled pipeline runs "
                     "in-process via `sim cluster --backends B`");
}

int cmd_ping_server(const ServerOpts& o) {
  reject_scaled_flags(o, "ping-server");
  auto cfg = load_config_or_default(o.config);
  const auto listen = net::parse_endpoint(o.listen.empty() ? cfg.listen : o.listen);
  const auto round_ms = o.round_ms ? o.round_ms : cfg.params.round_ms;
  ping::PingServer srv(cfg.params, read_keypair(cfg.ping_key), Rng());
  net::RoundNode node(listen, std::chrono::milliseconds(round_ms), net::ping_hooks(srv), Rng());
  MetricsEndpoint metrics(o.metrics_listen.empty() ? cfg.metrics_listen : o.metrics_listen, [&] {
    return node.with_state([&] { return net::ping_metrics_text(srv.metrics(), node.counters()); });
  });
  spdlog::info("ping-server round {} ms, max_friends {}", round_ms, cfg.params.max_friends);
  run_node(node, o.rounds);
  return kExitOk;
}

int cmd_pong_server(const ServerOpts& o) {
  reject_scaled_flags(o, "pong-server");
  auto cfg = load_config_or_default(o.config);
  const auto listen = net::parse_endpoint(o.listen.empty() ? cfg.pong_addr : o.listen);
  const auto round_ms = o.round_ms ? o.round_ms : cfg.params.round_ms;
  pong::StoreOptions so;
  so.k = cfg.params.k;
  so.m = cfg.params.m;
  so.N = cfg.params.N;
  so.Z = cfg.params.Z;
  so.eps = cfg.params.epsilon_oht;
  so.c = 1024;
  so.background_merge = true;
  pong::PongServer srv(so, read_keypair(cfg.pong_key), Rng());
  net::RoundNode node(listen, std::chrono::milliseconds(round_ms), net::pong_hooks(srv), Rng());
  MetricsEndpoint metrics(o.metrics_listen.empty() ? cfg.metrics_listen : o.metrics_listen, [&] {
    return node.with_state([&] {
      std::ostringstream s;
      s << net::pong_metrics_text(srv.metrics(), srv.store().stats(), node.counters()) << "bins "
        << srv.store().buf_size() << "\ntables " << srv.store().table_count() << "\nrebuilds "
        << srv.store().stats().rebuilds << "\n";
      return s.str();
    });
  });
  spdlog::info("pong-server round {} ms, k={} m={} N={}", round_ms, so.k, so.m, so.N);
  run_node(node, o.rounds);
  return kExitOk;
}

// ---- client ----

struct ClientOpts {
  std::string config;
  std::uint64_t id = 0;
  std::string label;
  std::string server_ping, server_pong;
  std::string friends_file;
  std::string inbox_out;
  std::vector<std::string> send;
  std::uint64_t rounds = 10;
  std::uint32_t round_ms = 0;
};

void load_friends(client::Client& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read friends file " + path);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::uint64_t id = 0, idx = 0;
    std::string sk_hex, tok_hex;
    if (!(ls >> id >> sk_hex >> tok_hex >> idx)) throw UsageError(path + ":" + std::to_string(no) + ": expected `id hex_sk hex_sealed_token idx`");
    auto sk = crypto::array_from_hex<crypto_aead_xchacha20poly1305_ietf_KEYBYTES>(sk_hex);
    auto tok = crypto::from_hex(tok_hex);
    if (!sk || !tok || tok->size() != protocol::kSealedTokenLen)
      throw UsageError(path + ":" + std::to_string(no) + ": bad key or token");
    client::FriendRecord f;
    f.id = ClientId{id};
    f.idx = static_cast<std::uint32_t>(idx);
    f.sk = *sk;
    f.notf_token = *tok;
    c.restore_friend(f);
  }
}

int cmd_client(const ClientOpts& o) {
  auto cfg = load_config_or_default(o.config);
  const auto ping_pk = read_raw_key<crypto_box_PUBLICKEYBYTES>(cfg.ping_pub, "ping public key");
  const auto pong_pk = read_raw_key<crypto_box_PUBLICKEYBYTES>(cfg.pong_pub, "pong public key");
  auto lb = crypto::array_from_hex<32>(o.label);
  if (!lb) throw UsageError("--label must be 64 hex characters");
  const Label label = get_label(lb->data());
  if (label == kNullLabel) throw UsageError("the all-zero label is reserved");
  client::Client c(ClientId{o.id}, label, cfg.params, ping_pk, pong_pk, Rng());
  if (!o.friends_file.empty()) load_friends(c, o.friends_file);
  for (const auto& s : o.send) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("--send expects ID:TEXT");
    try {
      c.send(ClientId{std::stoull(s.substr(0, colon))}, s.substr(colon + 1));
    } catch (const std::exception& e) {
      throw UsageError("--send " + s + ": " + e.what());
    }
  }
  const auto round = std::chrono::milliseconds(o.round_ms ? o.round_ms : cfg.params.round_ms);
  net::ClientDriver driver(c, net::parse_endpoint(o.server_ping.empty() ? cfg.ping_addr : o.server_ping),
                           net::parse_endpoint(o.server_pong.empty() ? cfg.pong_addr : o.server_pong), round);
  std::ofstream inbox;
  if (!o.inbox_out.empty()) {
    inbox.open(o.inbox_out, std::ios::trunc);
    if (!inbox) throw UsageError("cannot write " + o.inbox_out);
  }
  std::size_t written = 0;
  const auto st = driver.run(o.rounds, [&](std::uint64_t) {
    const auto box = c.inbox();
    for (; written < box.size(); ++written) {
      const auto& d = box[written];
      const json line = {{"round", d.round}, {"from", d.from.value}, {"text", d.text}};
      spdlog::info("round {}: message from {}", d.round, d.from.value);
      if (inbox.is_open()) inbox << line.dump() << '\n' << std::flush;
    }
  });
  const auto cs = c.stats();
  emit_json({{"rounds", st.rounds},
             {"timeouts", st.timeouts},
             {"delivered", written},
             {"pending_outbox", c.outbox_size()},
             {"pending_tokens", c.pending_tokens()},
             {"anomalies", cs.anomalies}},
            "");
  return kExitOk;
}

// ---- sim ----

struct SimOpts {
  std::string trace;
  double window = 300;
  double round_s = 0.5;
  double proc_s = 3.0;
  bool no_jitter = false;
  std::uint64_t seed = 1;
  std::string csv;
  std::string out;
  harness::ClusterConfig cluster;
  std::string config;
};

harness::MsgTrace load_trace_or_usage(const std::string& path) {
  try {
    return harness::load_trace(path);
  } catch (const harness::TraceParseError& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

int cmd_sim_dial(const SimOpts& o) {
  const auto t = load_trace_or_usage(o.trace);
  const auto r = harness::simulate_dial(t, o.window);
  if (!o.csv.empty()) write_csv(o.csv, "latency_s", r.latencies);
  emit_json({{"model", "dial"},
             {"users", t.users()},
             {"messages", t.messages()},
             {"window_s", o.window},
             {"avg_latency", r.avg_latency},
             {"conflict_fraction", r.conflict_fraction},
             {"conversations", r.conversations},
             {"waited", r.waited}},
            o.out);
  return kExitOk;
}

int cmd_sim_notify(const SimOpts& o) {
  const auto t = load_trace_or_usage(o.trace);
  harness::NotifyOptions no;
  no.proc_latency_s = o.proc_s;
  no.round_s = o.round_s;
  no.jitter = !o.no_jitter;
  no.seed = o.seed;
  const auto r = harness::simulate_notify(t, no);
  if (!o.csv.empty()) write_csv(o.csv, "latency_s", r.latencies);
  emit_json({{"model", "notify"},
             {"users", t.users()},
             {"messages", t.messages()},
             {"round_s", o.round_s},
             {"avg_latency", r.avg_latency},
             {"avg_alignment", r.avg_alignment},
             {"avg_queue", r.avg_queue},
             {"queued", r.queued}},
            o.out);
  return kExitOk;
}

int cmd_sim_cluster(SimOpts o) {
  if (!o.config.empty()) o.cluster.params = load_config_or_default(o.config).params;
  if (o.cluster.clients == 0 || o.cluster.backends == 0) throw UsageError("--clients and --backends must be positive");
  const auto r = harness::run_cluster_sim(o.cluster);
  if (!o.csv.empty()) write_csv(o.csv, "latency_s", r.latencies_s);
  double avg = 0;
  for (double l : r.latencies_s) avg += l;
  if (!r.latencies_s.empty()) avg /= static_cast<double>(r.latencies_s.size());
  json j = {{"clients", o.cluster.clients},
            {"rounds", o.cluster.rounds},
            {"rounds_run", r.rounds_run},
            {"backends", o.cluster.backends},
            {"seed", o.cluster.seed},
            {"sent", r.sent.size()},
            {"delivered", r.delivered},
            {"missing", r.missing},
            {"duplicated", r.duplicated},
            {"cross_delivered", r.cross},
            {"uniform", r.uniform()},
            {"avg_latency_s", avg},
            {"fingerprint", r.fingerprint},
            {"wall_ms", r.wall_ms},
            {"ok", r.ok()}};
  if (!r.violations.empty()) j["violations"] = std::vector<std::string>(r.violations.begin(), r.violations.begin() + std::min<std::size_t>(r.violations.size(), 20));
  emit_json(j, o.out);
  if (!r.ok()) {
    spdlog::error("cluster simulation failed: {} violations, {} missing, {} duplicated, {} cross", r.violations.size(),
                  r.missing, r.duplicated, r.cross);
    return kExitAssert;
  }
  return kExitOk;
}

// ---- bench ----

struct BenchOpts {
  std::string sizes = "1e5,1e6";
  std::size_t lookups = 1000;
  std::uint64_t seed = 1;
  std::string out;
};

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    try {
      const double v = std::stod(tok);
      if (v < 1) throw std::invalid_argument("size");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("bad size '" + tok + "'");
    }
  }
  if (out.empty()) throw UsageError("--sizes is empty");
  return out;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

using Table = pong::Oht<Word>;

std::vector<pong::OhtEntry<Word>> random_entries(std::size_t n, Rng& rng) {
  std::vector<pong::OhtEntry<Word>> items(n);
  for (auto& e : items) e = {rng(), 1, rng()};
  return items;
}

int cmd_bench(const std::string& what, const BenchOpts& o) {
  const auto sizes = parse_sizes(o.sizes);
  Rng rng(o.seed);
  json rows = json::array();
  std::vector<double> times;
  for (const auto n : sizes) {
    spdlog::info("bench {} n={}", what, n);
    AccessTrace tr(AccessTrace::Mode::count);
    json row = {{"n", n}};
    if (what == "oht") {
      auto items = random_entries(n, rng);
      const auto t0 = std::chrono::steady_clock::now();
      auto t = Table::build(items, rng, {}, &tr);
      const double ms = ms_since(t0);
      row["build_ms"] = ms;
      row["ops"] = tr.total_ops();
      row["rebuilds"] = t.rebuilds();
      times.push_back(ms);
    } else if (what == "lookup") {
      auto items = random_entries(n, rng);
      auto t = Table::build(items, rng);
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < o.lookups; ++i) {
        const auto& e = items[rng.uniform(n)];
        (void)t.lookup(e.key, 1, rng, &tr);
      }
      const double us = ms_since(t0) * 1000.0 / static_cast<double>(o.lookups);
      row["lookup_us"] = us;
      row["ops_per_lookup"] = tr.total_ops() / o.lookups;
      times.push_back(us);
    } else {
      std::vector<ping::AggPacket> pkts;
      pkts.reserve(2 * n);
      std::vector<Label> labels(n);
      for (auto& l : labels) l = harness::sim_label(rng);
      for (std::size_t i = 0; i < n; ++i) {
        auto p = ping::blank_packet();
        p.label = labels[rng.uniform(n)];
        protocol::set_bit(p.vec, rng.uniform(protocol::kMaxFriendsCapacity));
        pkts.push_back(p);
      }
      for (std::size_t i = 0; i < n; ++i) pkts.push_back(ping::carrier_for(labels[i], i));
      const auto t0 = std::chrono::steady_clock::now();
      ping::oblivious_aggregate(pkts, &tr);
      const double ms = ms_since(t0);
      row["aggregate_ms"] = ms;
      row["ops"] = tr.total_ops();
      times.push_back(ms);
    }
    rows.push_back(row);
  }
  json j = {{"bench", what}, {"results", rows}};
  bool trend_ok = true;
  if (what == "oht" || what == "aggregate") {
    bool superlinear = true;
    for (std::size_t i = 1; i < times.size(); ++i) {
      trend_ok = trend_ok && times[i] > times[i - 1];
      superlinear = superlinear && times[i] / times[i - 1] > static_cast<double>(sizes[i]) / static_cast<double>(sizes[i - 1]);
    }
    j["increasing"] = trend_ok;
    j["superlinear"] = superlinear;
  } else {
    double lo = times.front(), hi = times.front();
    for (double t : times) lo = std::min(lo, t), hi = std::max(hi, t);
    j["max_over_min"] = hi / lo;
  }
  emit_json(j, o.out);
  return trend_ok ? kExitOk : kExitAssert;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PingPong metadata-private messaging: servers, client, simulations and benchmarks"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

  KeygenOpts kg;
  auto* keygen = app.add_subcommand("keygen", "Generate service keypairs and an example friend pair");
  keygen->add_option("--out", kg.out, "Output directory")->required();
  keygen->add_option("--seed", kg.seed, "Deterministic seed (0 = system randomness)");
  std::string keygen_config;
  keygen->add_option("--config", keygen_config, "Config file (unused)");

  ServerOpts ps, qs;
  auto* ping_srv = app.add_subcommand("ping-server", "Run a Ping notification server");
  auto* pong_srv = app.add_subcommand("pong-server", "Run a Pong message store server");
  for (auto [cmd, o] : {std::pair{ping_srv, &ps}, std::pair{pong_srv, &qs}}) {
    cmd->add_option("--config", o->config, "Config file")->check(CLI::ExistingFile);
    cmd->add_option("--listen", o->listen, "host:port to listen on");
    cmd->add_option("--round-ms", o->round_ms, "Round length in milliseconds");
    cmd->add_flag("--entry", o->entry, "Entry-node role");
    cmd->add_option("--peers", o->peers, "Backend addresses")->delimiter(',');
    cmd->add_option("--rounds", o->rounds, "Stop after this many rounds (0 = run until signalled)");
    cmd->add_option("--metrics-listen", o->metrics_listen, "host:port for the metrics endpoint");
  }
  ping_srv->add_flag("--backend", ps.backend, "Backend role");
  pong_srv->add_flag("--storage", qs.storage, "Storage-node role");

  ClientOpts co;
  auto* cli = app.add_subcommand("client", "Run a client for a number of rounds");
  cli->add_option("--config", co.config, "Config file")->check(CLI::ExistingFile);
  cli->add_option("--id", co.id, "Client id")->required();
  cli->add_option("--label", co.label, "Private 256-bit label, hex")->required();
  cli->add_option("--server-ping", co.server_ping, "Ping host:port");
  cli->add_option("--server-pong", co.server_pong, "Pong host:port");
  cli->add_option("--friends-file", co.friends_file, "Lines of `id hex_sk hex_sealed_token idx`")->check(CLI::ExistingFile);
  cli->add_option("--inbox-out", co.inbox_out, "Write delivered messages as JSON lines");
  cli->add_option("--send", co.send, "Queue a message, ID:TEXT (repeatable)");
  cli->add_option("--rounds", co.rounds, "Rounds to run")->capture_default_str();
  cli->add_option("--round-ms", co.round_ms, "Round length in milliseconds");

  SimOpts so;
  auto* sim = app.add_subcommand("sim", "Trace replay and cluster simulation");
  sim->require_subcommand(1);
  auto* dial = sim->add_subcommand("dial", "Dial-before-conversation latency model");
  auto* notify = sim->add_subcommand("notify", "Notify-before-retrieval latency model");
  auto* cluster = sim->add_subcommand("cluster", "In-process deployment with a virtual clock");
  for (auto* c : {dial, notify, cluster}) {
    c->add_option("--config", so.config, "Config file")->check(CLI::ExistingFile);
    c->add_option("--csv", so.csv, "Write per-message latencies as CSV");
    c->add_option("--out", so.out, "Write JSON here instead of stdout");
  }
  for (auto* c : {dial, notify}) c->add_option("--trace", so.trace, "SNAP trace file (SRC DST UNIXTIME)")->required();
  dial->add_option("--window", so.window, "Conversation window in seconds")->capture_default_str();
  notify->add_option("--round-s", so.round_s, "Round length in seconds")->capture_default_str();
  notify->add_option("--proc-s", so.proc_s, "End-to-end processing latency")->capture_default_str();
  notify->add_flag("--no-jitter", so.no_jitter, "Treat whole-second timestamps as exact");
  notify->add_option("--seed", so.seed, "Seed for sub-second jitter")->capture_default_str();
  cluster->add_option("--clients", so.cluster.clients, "Clients M")->capture_default_str();
  cluster->add_option("--rounds", so.cluster.rounds, "Rounds R")->capture_default_str();
  cluster->add_option("--backends", so.cluster.backends, "Backends B")->capture_default_str();
  cluster->add_option("--entries", so.cluster.entries, "Entry nodes when B > 1")->capture_default_str();
  cluster->add_option("--seed", so.cluster.seed, "Seed")->capture_default_str();
  cluster->add_option("--msg-prob", so.cluster.msg_prob, "Per-round message probability")->capture_default_str();
  cluster->add_option("--friends", so.cluster.friends, "Friendships started per client")->capture_default_str();

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "Oblivious micro-benchmarks");
  bench->require_subcommand(1);
  std::string bench_what;
  for (const char* name : {"oht", "lookup", "aggregate"}) {
    auto* b = bench->add_subcommand(name, std::string("Benchmark ") + name);
    b->add_option("--sizes", bo.sizes, "Comma-separated sizes, e.g. 1e5,1e6")->capture_default_str();
    b->add_option("--lookups", bo.lookups, "Lookups per size (lookup bench)")->capture_default_str();
    b->add_option("--seed", bo.seed, "Seed")->capture_default_str();
    b->add_option("--out", bo.out, "Write JSON here instead of stdout");
    b->add_option("--config", keygen_config, "Config file (unused)");
    b->callback([&bench_what, name] { bench_what = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    init_logging(log_level);
    if (*keygen) return cmd_keygen(kg);
    if (*ping_srv) return cmd_ping_server(ps);
    if (*pong_srv) return cmd_pong_server(qs);
    if (*cli) return cmd_client(co);
    if (*dial) return cmd_sim_dial(so);
    if (*notify) return cmd_sim_notify(so);
    if (*cluster) return cmd_sim_cluster(so);
    if (*bench) return cmd_bench(bench_what, bo);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const protocol::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitAssert;
  }
  return kExitUsage;
}
