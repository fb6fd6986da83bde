#pragma once

#include <sodium.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pingpong/rng.hpp"
#include "pingpong/types.hpp"

namespace pingpong::crypto {

using SymKey = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kSealOverhead = crypto_box_SEALBYTES;
inline constexpr std::size_t kNonceLen = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
inline constexpr std::size_t kTagLen = crypto_aead_xchacha20poly1305_ietf_ABYTES;
inline constexpr std::size_t kAeadOverhead = kNonceLen + kTagLen;

static_assert(kSealOverhead == 48 && kAeadOverhead == 40);

// Service keypair ("PingPKey"/"PingSKey", "PongKey"). The secret half is held by
// every node of the subsystem.
struct KeyPair {
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> pk{};
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> sk{};

  static KeyPair generate(Rng& rng) {
    std::array<std::uint8_t, crypto_box_SEEDBYTES> seed;
    rng.fill(seed);
    KeyPair kp;
    crypto_box_seed_keypair(kp.pk.data(), kp.sk.data(), seed.data());
    sodium_memzero(seed.data(), seed.size());
    return kp;
  }

  static KeyPair from_secret(const std::array<std::uint8_t, crypto_box_SECRETKEYBYTES>& sk) {
    KeyPair kp;
    kp.sk = sk;
    crypto_scalarmult_base(kp.pk.data(), kp.sk.data());
    return kp;
  }
};

using PublicKey = std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES>;

inline SymKey random_key(Rng& rng) {
  SymKey k;
  rng.fill(k);
  return k;
}

// Anonymous sealing to a public key. Wire-compatible with crypto_box_seal
// (ephemeral key ‖ box, nonce = BLAKE2b(epk ‖ pk)), but the ephemeral key is
// drawn from `rng` so seeded simulations stay reproducible.
inline Bytes seal(std::span<const std::uint8_t> pt, const PublicKey& pk, Rng& rng) {
  sodium_ready();
  std::array<std::uint8_t, crypto_box_SEEDBYTES> seed;
  rng.fill(seed);
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> epk;
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> esk;
  crypto_box_seed_keypair(epk.data(), esk.data(), seed.data());

  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce;
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, nonce.size());
  crypto_generichash_update(&st, epk.data(), epk.size());
  crypto_generichash_update(&st, pk.data(), pk.size());
  crypto_generichash_final(&st, nonce.data(), nonce.size());

  Bytes out(pt.size() + kSealOverhead);
  std::copy(epk.begin(), epk.end(), out.begin());
  if (crypto_box_easy(out.data() + epk.size(), pt.data(), pt.size(), nonce.data(), pk.data(),
                      esk.data()) != 0)
    throw std::runtime_error("seal: invalid public key");
  sodium_memzero(esk.data(), esk.size());
  sodium_memzero(seed.data(), seed.size());
  return out;
}

inline std::optional<Bytes> unseal(std::span<const std::uint8_t> ct, const KeyPair& kp) {
  if (ct.size() < kSealOverhead) return std::nullopt;
  Bytes out(ct.size() - kSealOverhead);
  if (crypto_box_seal_open(out.data(), ct.data(), ct.size(), kp.pk.data(), kp.sk.data()) != 0)
    return std::nullopt;
  return out;
}

// XChaCha20-Poly1305. Output: nonce(24) ‖ ciphertext ‖ tag(16).
inline Bytes aead_encrypt(const SymKey& key, std::span<const std::uint8_t> pt,
                          std::span<const std::uint8_t> ad, Rng& rng) {
  Bytes out(pt.size() + kAeadOverhead);
  rng.fill({out.data(), kNonceLen});
  unsigned long long clen = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(out.data() + kNonceLen, &clen, pt.data(), pt.size(),
                                             ad.data(), ad.size(), nullptr, out.data(), key.data());
  return out;
}

inline std::optional<Bytes> aead_decrypt(const SymKey& key, std::span<const std::uint8_t> ct,
                                         std::span<const std::uint8_t> ad) {
  if (ct.size() < kAeadOverhead) return std::nullopt;
  Bytes out(ct.size() - kAeadOverhead);
  unsigned long long plen = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(out.data(), &plen, nullptr, ct.data() + kNonceLen,
                                                 ct.size() - kNonceLen, ad.data(), ad.size(),
                                                 ct.data(), key.data()) != 0)
    return std::nullopt;
  return out;
}

// token = PRF(sk, receiver ‖ sender ‖ counter), fixed-width big-endian input,
// keyed BLAKE2b with 64-bit output.
inline RetrievalToken derive_token(const SymKey& sk, ClientId receiver, ClientId sender,
                                   std::uint64_t counter) {
  std::array<std::uint8_t, 24> in;
  put_u64_be(in.data(), receiver.value);
  put_u64_be(in.data() + 8, sender.value);
  put_u64_be(in.data() + 16, counter);
  std::array<std::uint8_t, 8> out;
  crypto_generichash(out.data(), out.size(), in.data(), in.size(), sk.data(), sk.size());
  return RetrievalToken{get_u64_be(out.data())};
}

// Keyed 64-bit hash (SipHash-2-4). Used for OHT bucket selection (secret seed)
// and for public bin assignment (fixed seed).
using HashSeed = std::array<std::uint8_t, crypto_shorthash_KEYBYTES>;

inline std::uint64_t keyed_hash(const HashSeed& seed, std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, crypto_shorthash_BYTES> out;
  crypto_shorthash(out.data(), data.data(), data.size(), seed.data());
  return get_u64_be(out.data());
}

inline std::uint64_t keyed_hash(const HashSeed& seed, std::uint64_t x) {
  std::array<std::uint8_t, 8> in;
  put_u64_be(in.data(), x);
  return keyed_hash(seed, in);
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string s(bytes.size() * 2 + 1, '\0');
  sodium_bin2hex(s.data(), s.size(), bytes.data(), bytes.size());
  s.pop_back();
  return s;
}

inline std::optional<Bytes> from_hex(std::string_view hex) {
  Bytes out(hex.size() / 2);
  std::size_t len = 0;
  const char* end = nullptr;
  if (hex.size() % 2 != 0 ||
      sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr, &len, &end) != 0 ||
      len != out.size())
    return std::nullopt;
  return out;
}

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> array_from_hex(std::string_view hex) {
  auto b = from_hex(hex);
  if (!b || b->size() != N) return std::nullopt;
  std::array<std::uint8_t, N> a;
  std::copy(b->begin(), b->end(), a.begin());
  return a;
}

}  // namespace pingpong::crypto
