#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pingpong/crypto.hpp"
#include "pingpong/protocol/params.hpp"
#include "pingpong/protocol/wire.hpp"

namespace pingpong::client {

using protocol::Frame;
using protocol::NotfVec;

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FriendRecord {
  ClientId id;
  std::uint32_t idx = 0;
  crypto::SymKey sk{};
  std::uint64_t send_counter = 0;
  std::uint64_t recv_counter = 0;
  Bytes notf_token;  // buddy's sealed token; sending it notifies them
};

struct PendingToken {
  RetrievalToken token;
  std::uint32_t idx = 0;
  ClientId from;
  std::uint64_t seq = 0;
};

// Retrieval schedule. FIFO unless a comparator is installed; `before(a, b)`
// says a should be fetched before b.
class TokenQueue {
 public:
  using Before = std::function<bool(const PendingToken&, const PendingToken&)>;

  void set_priority(Before before) { before_ = std::move(before); }
  void push(PendingToken t) {
    t.seq = next_seq_++;
    items_.push_back(t);
  }
  void push_front(PendingToken t) { items_.push_front(t); }
  std::optional<PendingToken> pop() {
    if (items_.empty()) return std::nullopt;
    auto it = items_.begin();
    if (before_) it = std::min_element(items_.begin(), items_.end(), before_);
    PendingToken t = *it;
    items_.erase(it);
    return t;
  }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  std::deque<PendingToken> items_;
  Before before_;
  std::uint64_t next_seq_ = 0;
};

struct Delivered {
  std::uint64_t round = 0;
  ClientId from;
  std::string text;
};

struct RoundPackets {
  Frame notf;
  Frame msg;
  Frame read;
  std::optional<ClientId> sent_to;  // real message recipient this round, if any
  std::optional<std::string> sent_text;
};

struct ClientStats {
  std::uint64_t anomalies = 0;    // digest bits with no friend, bad responses
  std::uint64_t not_found = 0;    // real reads that came back empty
  std::uint64_t rounds = 0;
};

// Client SDK: friend list, notification and message generation, digest
// parsing and the per-round send/receive pipeline. All methods serialize on
// one mutex, so a sender task and a receiver task may share an instance.
class Client {
 public:
  Client(ClientId id, Label label, protocol::Params params, crypto::PublicKey ping_pk, crypto::PublicKey pong_pk,
         Rng rng)
      : id_(id), label_(label), params_(params), ping_pk_(ping_pk), pong_pk_(pong_pk), rng_(std::move(rng)) {
    params_.validate();
    ping_session_ = crypto::random_key(rng_);
    pong_session_ = crypto::random_key(rng_);
  }

  ClientId id() const { return id_; }
  const Label& label() const { return label_; }

  Frame ping_hello() {
    std::lock_guard lock(mu_);
    return protocol::make_hello(ping_pk_, {ping_session_, id_, label_}, rng_);
  }
  Frame pong_hello() {
    std::lock_guard lock(mu_);
    return protocol::make_hello(pong_pk_, {pong_session_, id_, kNullLabel}, rng_);
  }

  // Allocates the next vector slot for `id` and returns it with the sealed
  // token to hand to that friend out of band.
  std::pair<std::uint32_t, Bytes> add_friend(ClientId id, const crypto::SymKey& sk) {
    std::lock_guard lock(mu_);
    if (friends_.size() >= params_.max_friends) throw CapacityError("friend list is full");
    if (by_id_.count(id)) throw std::invalid_argument("already a friend");
    const auto idx = static_cast<std::uint32_t>(friends_.size());
    friends_.push_back(FriendRecord{id, idx, sk, 0, 0, {}});
    by_id_[id] = idx;
    return {idx, sealed_token_locked(idx)};
  }

  // Restores a friend at a known slot, e.g. from a friends file.
  void restore_friend(const FriendRecord& f) {
    std::lock_guard lock(mu_);
    if (f.idx >= params_.max_friends) throw CapacityError("friend index out of range");
    if (friends_.size() <= f.idx) friends_.resize(f.idx + 1);
    friends_[f.idx] = f;
    by_id_[f.id] = f.idx;
  }

  void set_friend_token(ClientId id, Bytes sealed) {
    std::lock_guard lock(mu_);
    if (sealed.size() != protocol::kSealedTokenLen) throw std::invalid_argument("sealed token has wrong length");
    friends_.at(by_id_.at(id)).notf_token = std::move(sealed);
  }

  std::optional<FriendRecord> friend_record(ClientId id) const {
    std::lock_guard lock(mu_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return friends_[it->second];
  }

  // Queue a message; at most one real message leaves per round.
  void send(ClientId to, const std::string& text) {
    std::lock_guard lock(mu_);
    if (!by_id_.count(to)) throw std::invalid_argument("not a friend");
    if (text.size() > params_.msg_len) throw std::length_error("message longer than msg_len");
    outbox_.push_back({to, text});
  }

  Frame gen_notf(std::optional<ClientId> buddy, std::uint64_t round) {
    std::lock_guard lock(mu_);
    return gen_notf_locked(buddy, round);
  }

  Frame gen_msg(std::optional<ClientId> buddy, const std::string& text, std::uint64_t round) {
    std::lock_guard lock(mu_);
    return gen_msg_locked(buddy, text, round);
  }

  std::vector<RetrievalToken> parse_notf(const NotfVec& vec) {
    std::lock_guard lock(mu_);
    return parse_notf_locked(vec);
  }

  // Round r: one notification, one message packet, one read request. When
  // the Pong service counts rounds separately, its round is `store_round`.
  RoundPackets begin_round(std::uint64_t r, std::optional<std::uint64_t> store_round = std::nullopt) {
    const std::uint64_t rs = store_round.value_or(r);
    std::lock_guard lock(mu_);
    RoundPackets p;
    std::optional<Outgoing> out;
    if (!outbox_.empty()) {
      out = outbox_.front();
      outbox_.pop_front();
      p.sent_to = out->to;
      p.sent_text = out->text;
    }
    p.notf = gen_notf_locked(out ? std::optional(out->to) : std::nullopt, r);
    p.msg = gen_msg_locked(out ? std::optional(out->to) : std::nullopt, out ? out->text : std::string{}, rs);
    auto tok = tokens_.pop();
    p.read = make_read_locked(tok, rs);
    in_flight_[rs] = InFlight{out, tok};
    ++stats_.rounds;
    return p;
  }

  // The round's packets never reached the servers: undo counter advance and
  // requeue both the message and the token. Keyed by the store round.
  void abort_round(std::uint64_t r) {
    std::lock_guard lock(mu_);
    auto it = in_flight_.find(r);
    if (it == in_flight_.end()) return;
    if (it->second.out) {
      --friends_[by_id_.at(it->second.out->to)].send_counter;
      outbox_.push_front(*it->second.out);
    }
    if (it->second.token) tokens_.push_front(*it->second.token);
    in_flight_.erase(it);
  }

  void on_digest(const Frame& f) {
    std::lock_guard lock(mu_);
    auto pt = protocol::open_frame(ping_session_, f);
    if (f.kind != protocol::Kind::digest || !pt) {
      ++stats_.anomalies;
      return;
    }
    parse_notf_locked(protocol::get_vec(pt->data()));
  }

  // Returns the delivered message, if the response carried one for us.
  std::optional<Delivered> on_response(const Frame& f) {
    std::lock_guard lock(mu_);
    auto it = in_flight_.find(f.round);
    if (it == in_flight_.end()) return std::nullopt;
    const auto tok = it->second.token;
    in_flight_.erase(it);
    auto pt = protocol::open_frame(pong_session_, f);
    std::optional<protocol::ResponsePlain> rp;
    if (f.kind == protocol::Kind::response && pt) rp = protocol::ResponsePlain::decode(*pt);
    if (!rp) {
      ++stats_.anomalies;
      return std::nullopt;
    }
    if (!tok) return std::nullopt;  // our read was a dummy
    if (!rp->found) {
      ++stats_.not_found;
      return std::nullopt;
    }
    auto fr = by_id_.find(rp->sender);
    if (fr == by_id_.end() || rp->sender != tok->from) {
      ++stats_.anomalies;
      return std::nullopt;
    }
    auto text = protocol::open_message(friends_[fr->second].sk, tok->token, rp->inner);
    if (!text) {
      ++stats_.anomalies;
      return std::nullopt;
    }
    Delivered d{f.round, rp->sender, std::string(text->begin(), text->end())};
    inbox_.push_back(d);
    return d;
  }

  // A response that never arrived: fetch the same token next round.
  void on_read_lost(std::uint64_t r) {
    std::lock_guard lock(mu_);
    auto it = in_flight_.find(r);
    if (it == in_flight_.end()) return;
    if (it->second.token) tokens_.push_front(*it->second.token);
    in_flight_.erase(it);
  }

  void set_priority(TokenQueue::Before before) {
    std::lock_guard lock(mu_);
    tokens_.set_priority(std::move(before));
  }

  const crypto::SymKey& ping_session() const { return ping_session_; }
  const crypto::SymKey& pong_session() const { return pong_session_; }
  std::vector<Delivered> inbox() const {
    std::lock_guard lock(mu_);
    return inbox_;
  }
  std::size_t pending_tokens() const {
    std::lock_guard lock(mu_);
    return tokens_.size();
  }
  std::size_t outbox_size() const {
    std::lock_guard lock(mu_);
    return outbox_.size();
  }
  ClientStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

 private:
  struct Outgoing {
    ClientId to;
    std::string text;
  };
  struct InFlight {
    std::optional<Outgoing> out;
    std::optional<PendingToken> token;
  };

  Bytes sealed_token_locked(std::uint32_t idx) {
    return crypto::seal(protocol::TokenPlain{protocol::one_hot(idx), label_}.encode(), ping_pk_, rng_);
  }

  Frame gen_notf_locked(std::optional<ClientId> buddy, std::uint64_t round) {
    Bytes sealed;
    if (buddy) {
      const auto& f = friends_.at(by_id_.at(*buddy));
      if (f.notf_token.size() != protocol::kSealedTokenLen) throw std::logic_error("no notification token for friend");
      sealed = f.notf_token;
    } else {
      // Idle: sealed zero vector under the reserved null label.
      sealed = crypto::seal(protocol::TokenPlain{}.encode(), ping_pk_, rng_);
    }
    return protocol::make_notf(ping_session_, round, sealed, rng_);
  }

  Frame gen_msg_locked(std::optional<ClientId> buddy, const std::string& text, std::uint64_t round) {
    protocol::MsgPlain m;
    if (buddy) {
      if (text.size() > params_.msg_len) throw std::length_error("message longer than msg_len");
      auto& f = friends_.at(by_id_.at(*buddy));
      m.token = crypto::derive_token(f.sk, f.id, id_, f.send_counter);
      m.dummy = false;
      m.sender = id_;
      m.inner = protocol::seal_message(f.sk, m.token, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), rng_);
      ++f.send_counter;
    } else {
      m.token = RetrievalToken{rng_()};
      m.dummy = true;
      m.sender = ClientId{rng_()};
      m.inner = protocol::random_inner(rng_);
    }
    return protocol::seal_frame(pong_session_, protocol::Kind::msg, round, m.encode(), rng_);
  }

  std::vector<RetrievalToken> parse_notf_locked(const NotfVec& vec) {
    std::vector<RetrievalToken> out;
    for (std::size_t b = 0; b < protocol::kMaxFriendsCapacity; ++b) {
      if (!protocol::test_bit(vec, b)) continue;
      auto known = b < friends_.size() ? by_id_.find(friends_[b].id) : by_id_.end();
      if (known == by_id_.end() || known->second != b) {
        ++stats_.anomalies;
        continue;
      }
      auto& f = friends_[b];
      const auto t = crypto::derive_token(f.sk, id_, f.id, f.recv_counter++);
      tokens_.push(PendingToken{t, f.idx, f.id, 0});
      out.push_back(t);
    }
    return out;
  }

  Frame make_read_locked(const std::optional<PendingToken>& tok, std::uint64_t round) {
    protocol::ReadPlain rp{tok ? tok->token : RetrievalToken{rng_()}, !tok};
    return protocol::seal_frame(pong_session_, protocol::Kind::read, round, rp.encode(), rng_);
  }

  ClientId id_;
  Label label_;
  protocol::Params params_;
  crypto::PublicKey ping_pk_;
  crypto::PublicKey pong_pk_;
  Rng rng_;
  crypto::SymKey ping_session_{};
  crypto::SymKey pong_session_{};
  mutable std::mutex mu_;
  std::vector<FriendRecord> friends_;
  std::map<ClientId, std::uint32_t> by_id_;
  std::deque<Outgoing> outbox_;
  TokenQueue tokens_;
  std::map<std::uint64_t, InFlight> in_flight_;
  std::vector<Delivered> inbox_;
  ClientStats stats_;
};

}  // namespace pingpong::client
