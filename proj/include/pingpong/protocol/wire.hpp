#pragma once

// Packet layouts. Every frame is kind(1) ‖ round(8, BE) ‖ body, and every body
// length is a constant of its kind. Bodies are AEAD ciphertexts under the
// per-session key with the 9-byte header as associated data.
//
//   hello     seal_service(session_key 32 ‖ client_id 8 ‖ label 32)       120
//   welcome   aead(round 8)                                               48
//   notf      aead(sealed_token 144 ‖ zero pad 72)                         256
//   msg       aead(token 8 ‖ dummy 1 ‖ sender 8 ‖ inner 298)              355
//   read      aead(token 8 ‖ dummy 1)                                      49
//   digest    aead(vec 64)                                                104
//   response  aead(found 1 ‖ sender 8 ‖ inner 298)                        347
//
// sealed_token = seal_ping(vec 64 ‖ label 32), inner = aead_sk(len 2 ‖ msg 256).
// sub_batch frames carry router traffic between nodes; their length is a
// public function of the batch size and is checked by the receiver.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "pingpong/crypto.hpp"
#include "pingpong/protocol/params.hpp"
#include "pingpong/types.hpp"

namespace pingpong::protocol {

using NotfVec = std::array<std::uint64_t, kMaxFriendsCapacity / 64>;

inline void set_bit(NotfVec& v, std::size_t b) { v[b / 64] |= std::uint64_t{1} << (b % 64); }
inline bool test_bit(const NotfVec& v, std::size_t b) { return (v[b / 64] >> (b % 64)) & 1U; }
inline std::size_t popcount(const NotfVec& v) {
  std::size_t n = 0;
  for (auto w : v) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}
inline NotfVec one_hot(std::size_t b) {
  NotfVec v{};
  set_bit(v, b);
  return v;
}

class MalformedPacket : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind : std::uint8_t {
  hello = 1,
  welcome = 2,
  notf = 3,
  msg = 4,
  read = 5,
  digest = 6,
  response = 7,
  sub_batch = 8,
};

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::hello: return "hello";
    case Kind::welcome: return "welcome";
    case Kind::notf: return "notf";
    case Kind::msg: return "msg";
    case Kind::read: return "read";
    case Kind::digest: return "digest";
    case Kind::response: return "response";
    case Kind::sub_batch: return "sub_batch";
  }
  return "unknown";
}

inline constexpr std::size_t kHeaderLen = 9;
inline constexpr std::size_t kVecBytes = sizeof(NotfVec);
inline constexpr std::size_t kLabelBytes = 32;
inline constexpr std::size_t kTokenPlainLen = kVecBytes + kLabelBytes;                     // 96
inline constexpr std::size_t kSealedTokenLen = kTokenPlainLen + crypto::kSealOverhead;     // 144
inline constexpr std::size_t kInnerLen = 2 + kMsgCapacity + crypto::kAeadOverhead;         // 298
inline constexpr std::size_t kMsgPlainLen = 8 + 1 + 8 + kInnerLen;                         // 315
inline constexpr std::size_t kReadPlainLen = 8 + 1;
inline constexpr std::size_t kResponsePlainLen = 1 + 8 + kInnerLen;                        // 307
inline constexpr std::size_t kHelloPlainLen = 32 + 8 + kLabelBytes;                        // 72
inline constexpr std::size_t kNotfPlainLen = kNotfPacketLen - crypto::kAeadOverhead;       // 216

static_assert(kSealedTokenLen <= kNotfPlainLen);

// Body length per kind; 0 for sub_batch (variable, checked by the router).
inline constexpr std::size_t body_len(Kind k) {
  switch (k) {
    case Kind::hello: return kHelloPlainLen + crypto::kSealOverhead;
    case Kind::welcome: return 8 + crypto::kAeadOverhead;
    case Kind::notf: return kNotfPacketLen;
    case Kind::msg: return kMsgPlainLen + crypto::kAeadOverhead;
    case Kind::read: return kReadPlainLen + crypto::kAeadOverhead;
    case Kind::digest: return kVecBytes + crypto::kAeadOverhead;
    case Kind::response: return kResponsePlainLen + crypto::kAeadOverhead;
    case Kind::sub_batch: return 0;
  }
  return 0;
}

struct Frame {
  Kind kind{};
  std::uint64_t round = 0;
  Bytes body;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline std::array<std::uint8_t, kHeaderLen> header(Kind kind, std::uint64_t round) {
  std::array<std::uint8_t, kHeaderLen> h;
  h[0] = static_cast<std::uint8_t>(kind);
  put_u64_be(h.data() + 1, round);
  return h;
}

inline Bytes encode(const Frame& f) {
  const std::size_t want = body_len(f.kind);
  if (want != 0 && f.body.size() != want)
    throw MalformedPacket(std::string("encode: ") + kind_name(f.kind) + " body must be " +
                          std::to_string(want) + " bytes");
  Bytes out(kHeaderLen + f.body.size());
  const auto h = header(f.kind, f.round);
  std::copy(h.begin(), h.end(), out.begin());
  std::copy(f.body.begin(), f.body.end(), out.begin() + kHeaderLen);
  return out;
}

inline Frame decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderLen) throw MalformedPacket("frame shorter than header");
  const auto raw = bytes[0];
  if (raw < 1 || raw > 8) throw MalformedPacket("unknown packet kind " + std::to_string(raw));
  Frame f;
  f.kind = static_cast<Kind>(raw);
  f.round = get_u64_be(bytes.data() + 1);
  const std::size_t want = body_len(f.kind);
  const std::size_t have = bytes.size() - kHeaderLen;
  if (want != 0 && have != want)
    throw MalformedPacket(std::string(kind_name(f.kind)) + " body is " + std::to_string(have) +
                          " bytes, expected " + std::to_string(want));
  f.body.assign(bytes.begin() + kHeaderLen, bytes.end());
  return f;
}

// ---- plaintext layouts ----

inline void put_vec(std::uint8_t* out, const NotfVec& v) {
  for (std::size_t i = 0; i < v.size(); ++i) put_u64_be(out + 8 * i, v[i]);
}

inline NotfVec get_vec(const std::uint8_t* in) {
  NotfVec v;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = get_u64_be(in + 8 * i);
  return v;
}

struct TokenPlain {
  NotfVec vec{};
  Label label{};

  Bytes encode() const {
    Bytes b(kTokenPlainLen);
    put_vec(b.data(), vec);
    put_label(b.data() + kVecBytes, label);
    return b;
  }
  static std::optional<TokenPlain> decode(std::span<const std::uint8_t> b) {
    if (b.size() != kTokenPlainLen) return std::nullopt;
    return TokenPlain{get_vec(b.data()), get_label(b.data() + kVecBytes)};
  }
  friend bool operator==(const TokenPlain&, const TokenPlain&) = default;
};

using Inner = std::array<std::uint8_t, kInnerLen>;

struct MsgPlain {
  RetrievalToken token;
  bool dummy = false;
  ClientId sender;
  Inner inner{};

  Bytes encode() const {
    Bytes b(kMsgPlainLen);
    put_u64_be(b.data(), token.value);
    b[8] = dummy ? 1 : 0;
    put_u64_be(b.data() + 9, sender.value);
    std::copy(inner.begin(), inner.end(), b.begin() + 17);
    return b;
  }
  static std::optional<MsgPlain> decode(std::span<const std::uint8_t> b) {
    if (b.size() != kMsgPlainLen || b[8] > 1) return std::nullopt;
    MsgPlain m;
    m.token = RetrievalToken{get_u64_be(b.data())};
    m.dummy = b[8] == 1;
    m.sender = ClientId{get_u64_be(b.data() + 9)};
    std::copy(b.begin() + 17, b.end(), m.inner.begin());
    return m;
  }
  friend bool operator==(const MsgPlain&, const MsgPlain&) = default;
};

struct ReadPlain {
  RetrievalToken token;
  bool dummy = false;

  Bytes encode() const {
    Bytes b(kReadPlainLen);
    put_u64_be(b.data(), token.value);
    b[8] = dummy ? 1 : 0;
    return b;
  }
  static std::optional<ReadPlain> decode(std::span<const std::uint8_t> b) {
    if (b.size() != kReadPlainLen || b[8] > 1) return std::nullopt;
    return ReadPlain{RetrievalToken{get_u64_be(b.data())}, b[8] == 1};
  }
  friend bool operator==(const ReadPlain&, const ReadPlain&) = default;
};

struct ResponsePlain {
  bool found = false;
  ClientId sender;
  Inner inner{};

  Bytes encode() const {
    Bytes b(kResponsePlainLen);
    b[0] = found ? 1 : 0;
    put_u64_be(b.data() + 1, sender.value);
    std::copy(inner.begin(), inner.end(), b.begin() + 9);
    return b;
  }
  static std::optional<ResponsePlain> decode(std::span<const std::uint8_t> b) {
    if (b.size() != kResponsePlainLen || b[0] > 1) return std::nullopt;
    ResponsePlain r;
    r.found = b[0] == 1;
    r.sender = ClientId{get_u64_be(b.data() + 1)};
    std::copy(b.begin() + 9, b.end(), r.inner.begin());
    return r;
  }
  friend bool operator==(const ResponsePlain&, const ResponsePlain&) = default;
};

struct HelloPlain {
  crypto::SymKey session_key{};
  ClientId client;
  Label label{};

  Bytes encode() const {
    Bytes b(kHelloPlainLen);
    std::copy(session_key.begin(), session_key.end(), b.begin());
    put_u64_be(b.data() + 32, client.value);
    put_label(b.data() + 40, label);
    return b;
  }
  static std::optional<HelloPlain> decode(std::span<const std::uint8_t> b) {
    if (b.size() != kHelloPlainLen) return std::nullopt;
    HelloPlain h;
    std::copy(b.begin(), b.begin() + 32, h.session_key.begin());
    h.client = ClientId{get_u64_be(b.data() + 32)};
    h.label = get_label(b.data() + 40);
    return h;
  }
};

// ---- message body encryption (end-to-end, under the friendship key) ----

inline Inner seal_message(const crypto::SymKey& sk, RetrievalToken token,
                          std::span<const std::uint8_t> msg, Rng& rng) {
  if (msg.size() > kMsgCapacity) throw std::length_error("message exceeds 256 bytes");
  std::array<std::uint8_t, 2 + kMsgCapacity> pt{};
  pt[0] = static_cast<std::uint8_t>(msg.size() >> 8);
  pt[1] = static_cast<std::uint8_t>(msg.size());
  std::copy(msg.begin(), msg.end(), pt.begin() + 2);
  std::array<std::uint8_t, 8> ad;
  put_u64_be(ad.data(), token.value);
  const auto ct = crypto::aead_encrypt(sk, pt, ad, rng);
  Inner out;
  std::copy(ct.begin(), ct.end(), out.begin());
  return out;
}

inline std::optional<Bytes> open_message(const crypto::SymKey& sk, RetrievalToken token,
                                         const Inner& inner) {
  std::array<std::uint8_t, 8> ad;
  put_u64_be(ad.data(), token.value);
  auto pt = crypto::aead_decrypt(sk, inner, ad);
  if (!pt) return std::nullopt;
  const std::size_t len = (std::size_t{(*pt)[0]} << 8) | (*pt)[1];
  if (len > kMsgCapacity) return std::nullopt;
  return Bytes(pt->begin() + 2, pt->begin() + 2 + static_cast<std::ptrdiff_t>(len));
}

inline Inner random_inner(Rng& rng) {
  Inner x;
  rng.fill(x);
  return x;
}

// ---- session channel ----

inline Frame seal_frame(const crypto::SymKey& session, Kind kind, std::uint64_t round,
                        std::span<const std::uint8_t> plain, Rng& rng) {
  const auto h = header(kind, round);
  return Frame{kind, round, crypto::aead_encrypt(session, plain, h, rng)};
}

// Decrypts and length-checks a session frame; nullopt on any failure.
inline std::optional<Bytes> open_frame(const crypto::SymKey& session, const Frame& f) {
  const std::size_t want = body_len(f.kind);
  if (want != 0 && f.body.size() != want) return std::nullopt;
  const auto h = header(f.kind, f.round);
  return crypto::aead_decrypt(session, f.body, h);
}

inline Frame make_notf(const crypto::SymKey& session, std::uint64_t round,
                       std::span<const std::uint8_t> sealed_token, Rng& rng) {
  if (sealed_token.size() != kSealedTokenLen) throw MalformedPacket("sealed token must be 144 bytes");
  std::array<std::uint8_t, kNotfPlainLen> pt{};
  std::copy(sealed_token.begin(), sealed_token.end(), pt.begin());
  return seal_frame(session, Kind::notf, round, pt, rng);
}

inline std::optional<Bytes> open_notf(const crypto::SymKey& session, const Frame& f) {
  if (f.kind != Kind::notf) return std::nullopt;
  auto pt = open_frame(session, f);
  if (!pt) return std::nullopt;
  return Bytes(pt->begin(), pt->begin() + kSealedTokenLen);
}

inline Frame make_hello(const crypto::PublicKey& service, const HelloPlain& h, Rng& rng) {
  return Frame{Kind::hello, 0, crypto::seal(h.encode(), service, rng)};
}

inline std::optional<HelloPlain> open_hello(const crypto::KeyPair& service, const Frame& f) {
  if (f.kind != Kind::hello || f.body.size() != body_len(Kind::hello)) return std::nullopt;
  auto pt = crypto::unseal(f.body, service);
  if (!pt) return std::nullopt;
  return HelloPlain::decode(*pt);
}

}  // namespace pingpong::protocol
