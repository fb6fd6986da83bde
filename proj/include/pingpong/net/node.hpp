#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "pingpong/crypto.hpp"
#include "pingpong/net/tcp.hpp"
#include "pingpong/protocol/wire.hpp"

namespace pingpong::net {

using RoundInbox = std::map<protocol::Kind, std::map<ClientId, protocol::Frame>>;
using RoundOutput = std::map<ClientId, std::vector<protocol::Frame>>;

struct NodeHooks {
  // Registers a client from its hello; returns its id and session key.
  std::function<std::optional<std::pair<ClientId, crypto::SymKey>>(const protocol::Frame&)> hello;
  std::function<RoundOutput(std::uint64_t round, const RoundInbox&)> round;
  std::function<void(ClientId)> disconnect;
};

struct NodeCounters {
  std::atomic<std::uint64_t> frames_in{0};
  std::atomic<std::uint64_t> frames_out{0};
  std::atomic<std::uint64_t> stale{0};
  std::atomic<std::uint64_t> bad{0};
  std::atomic<std::uint64_t> rounds{0};
  std::atomic<std::uint64_t> connections{0};
};

// Round-driven TCP service. Clients open with a hello and get a welcome
// naming the next round; frames tagged with that round are collected until
// the tick, handed to the round hook, and the outputs sent back on the same
// connections. All hook calls are serialized.
class RoundNode {
 public:
  RoundNode(Endpoint listen, std::chrono::milliseconds round, NodeHooks hooks, Rng rng)
      : listener_(listen_tcp(listen)), round_(round), hooks_(std::move(hooks)), rng_(std::move(rng)) {}
  ~RoundNode() { stop(); }

  std::uint16_t port() const { return local_port(listener_); }
  std::uint64_t current_round() const { return round_no_.load(); }
  const NodeCounters& counters() const { return counters_; }

  void start() {
    running_ = true;
    threads_.emplace_back([this] { accept_loop(); });
    threads_.emplace_back([this] { tick_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    {
      std::lock_guard lock(conn_mu_);
      for (auto& c : all_conns_) c->sock.shutdown();
    }
    cv_.notify_all();
    for (auto& t : threads_)
      if (t.joinable()) t.join();
    threads_.clear();
    std::vector<std::thread> readers;
    {
      std::lock_guard lock(conn_mu_);
      readers.swap(readers_);
    }
    for (auto& t : readers)
      if (t.joinable()) t.join();
  }

  // Runs f while round processing is excluded, e.g. to read server metrics.
  template <class F>
  auto with_state(F&& f) {
    std::lock_guard lock(state_mu_);
    return f();
  }

  // Runs until stop() or, if max_rounds > 0, until that many rounds ticked.
  void wait(std::uint64_t max_rounds = 0) {
    std::unique_lock lock(state_mu_);
    cv_.wait(lock, [&] { return !running_ || (max_rounds && counters_.rounds >= max_rounds); });
  }

 private:
  struct Conn {
    Socket sock;
    std::mutex write_mu;
    std::optional<ClientId> id;
    crypto::SymKey session{};
  };

  void accept_loop() {
    while (running_) {
      auto s = accept_tcp(listener_, 100);
      if (!s) continue;
      auto c = std::make_shared<Conn>();
      c->sock = std::move(*s);
      ++counters_.connections;
      std::lock_guard lock(conn_mu_);
      all_conns_.push_back(c);
      readers_.emplace_back([this, c] { read_loop(c); });
    }
  }

  void read_loop(std::shared_ptr<Conn> c) {
    while (running_) {
      if (!wait_readable(c->sock.fd(), 100)) continue;
      std::optional<protocol::Frame> f;
      try {
        f = recv_frame(c->sock.fd());
      } catch (const protocol::MalformedPacket&) {
        ++counters_.bad;
        break;
      }
      if (!f) break;
      ++counters_.frames_in;
      if (!c->id) {
        if (f->kind != protocol::Kind::hello) {
          ++counters_.bad;
          break;
        }
        std::optional<std::pair<ClientId, crypto::SymKey>> who;
        {
          std::lock_guard lock(state_mu_);
          try {
            who = hooks_.hello(*f);
          } catch (const std::exception&) {
            who.reset();
          }
          if (who) {
            // Welcome goes out before the connection can receive round output.
            const std::uint64_t next = round_no_ + 1;
            c->id = who->first;
            c->session = who->second;
            Bytes body(8);
            put_u64_be(body.data(), next);
            std::lock_guard wl(c->write_mu);
            send_frame(c->sock.fd(), protocol::seal_frame(c->session, protocol::Kind::welcome, next, body, rng_));
            std::lock_guard cl(conn_mu_);
            by_id_[who->first] = c;
          }
        }
        if (!who) {
          ++counters_.bad;
          break;
        }
        continue;
      }
      std::lock_guard lock(state_mu_);
      if (f->round < round_no_) {
        ++counters_.stale;
        continue;
      }
      pending_[f->round][f->kind][*c->id] = std::move(*f);
    }
    if (c->id) {
      std::lock_guard lock(state_mu_);
      {
        std::lock_guard cl(conn_mu_);
        auto it = by_id_.find(*c->id);
        if (it != by_id_.end() && it->second == c) by_id_.erase(it);
      }
      if (hooks_.disconnect) hooks_.disconnect(*c->id);
    }
  }

  void tick_loop() {
    auto deadline = std::chrono::steady_clock::now() + round_;
    while (running_) {
      {
        std::unique_lock lock(state_mu_);
        if (cv_.wait_until(lock, deadline, [&] { return !running_.load(); })) break;
      }
      deadline += round_;
      RoundOutput out;
      std::map<ClientId, std::shared_ptr<Conn>> targets;
      std::uint64_t r = 0;
      {
        std::lock_guard lock(state_mu_);
        r = round_no_;
        RoundInbox inbox;
        if (auto it = pending_.find(r); it != pending_.end()) {
          inbox = std::move(it->second);
          pending_.erase(it);
        }
        pending_.erase(pending_.begin(), pending_.lower_bound(r));
        out = hooks_.round(r, inbox);
        round_no_ = r + 1;
        std::lock_guard cl(conn_mu_);
        targets = by_id_;
      }
      for (auto& [id, frames] : out) {
        auto t = targets.find(id);
        if (t == targets.end()) continue;
        std::lock_guard wl(t->second->write_mu);
        for (const auto& f : frames)
          if (send_frame(t->second->sock.fd(), f)) ++counters_.frames_out;
      }
      ++counters_.rounds;
      cv_.notify_all();
    }
  }

  Socket listener_;
  std::chrono::milliseconds round_;
  NodeHooks hooks_;
  Rng rng_;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> round_no_{0};
  std::mutex state_mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, RoundInbox> pending_;
  std::mutex conn_mu_;
  std::vector<std::shared_ptr<Conn>> all_conns_;
  std::map<ClientId, std::shared_ptr<Conn>> by_id_;
  std::vector<std::thread> threads_;
  std::vector<std::thread> readers_;
  NodeCounters counters_;
};

}  // namespace pingpong::net
