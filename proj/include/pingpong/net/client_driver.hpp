#pragma once

#include <chrono>
#include <functional>
#include <optional>

#include "pingpong/client.hpp"
#include "pingpong/net/tcp.hpp"

namespace pingpong::net {

struct DriverStats {
  std::uint64_t rounds = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t send_failures = 0;
};

// Sender and receiver loop of a networked client: one notification to Ping
// and one message plus one read to Pong per round, then wait for the digest
// and the response. Ping and Pong keep separate round counters.
class ClientDriver {
 public:
  ClientDriver(client::Client& c, const Endpoint& ping, const Endpoint& pong, std::chrono::milliseconds round)
      : c_(c), round_(round), ping_(connect_tcp(ping)), pong_(connect_tcp(pong)) {
    rp_ = handshake(ping_, c_.ping_hello(), c_.ping_session());
    rq_ = handshake(pong_, c_.pong_hello(), c_.pong_session());
  }

  // Runs `rounds` rounds; on_round is called after each with the store round.
  DriverStats run(std::uint64_t rounds, const std::function<void(std::uint64_t)>& on_round = {}) {
    DriverStats st;
    for (std::uint64_t i = 0; i < rounds; ++i) {
      const auto rp = rp_, rq = rq_;
      auto p = c_.begin_round(rp, rq);
      if (!send_frame(ping_.fd(), p.notf) || !send_frame(pong_.fd(), p.msg) || !send_frame(pong_.fd(), p.read)) {
        c_.abort_round(rq);
        ++st.send_failures;
        throw NetError("connection lost while sending round " + std::to_string(rq));
      }
      bool got_d = false, got_q = false;
      const auto deadline = std::chrono::steady_clock::now() + 3 * round_;
      while (!(got_d && got_q)) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) break;
        pollfd fds[2] = {{ping_.fd(), POLLIN, 0}, {pong_.fd(), POLLIN, 0}};
        if (::poll(fds, 2, static_cast<int>(left.count())) <= 0) continue;
        if (fds[0].revents) {
          auto f = recv_frame(ping_.fd());
          if (!f) throw NetError("ping connection closed");
          c_.on_digest(*f);
          if (f->round >= rp) {
            got_d = true;
            rp_ = f->round + 1;
          }
        }
        if (fds[1].revents) {
          auto f = recv_frame(pong_.fd());
          if (!f) throw NetError("pong connection closed");
          if (f->round > rq) c_.on_read_lost(rq);
          c_.on_response(*f);
          if (f->round >= rq) {
            got_q = true;
            rq_ = f->round + 1;
          }
        }
      }
      if (!got_d) {
        ++rp_;
      }
      if (!got_q) {
        c_.on_read_lost(rq);
        ++rq_;
      }
      if (!got_d || !got_q) ++st.timeouts;
      ++st.rounds;
      if (on_round) on_round(rq);
    }
    return st;
  }

 private:
  std::uint64_t handshake(Socket& s, const protocol::Frame& hello, const crypto::SymKey& session) {
    if (!send_frame(s.fd(), hello)) throw NetError("hello failed");
    if (!wait_readable(s.fd(), static_cast<int>(5 * round_.count() + 1000))) throw NetError("no welcome from server");
    auto w = recv_frame(s.fd());
    if (!w || w->kind != protocol::Kind::welcome) throw NetError("server refused the hello");
    auto pt = protocol::open_frame(session, *w);
    if (!pt || pt->size() != 8) throw NetError("bad welcome");
    return get_u64_be(pt->data());
  }

  client::Client& c_;
  std::chrono::milliseconds round_;
  Socket ping_, pong_;
  std::uint64_t rp_ = 0, rq_ = 0;
};

}  // namespace pingpong::net
