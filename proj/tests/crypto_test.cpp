#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <unordered_set>

#include "pingpong/crypto.hpp"

namespace {

using namespace pingpong;
using namespace pingpong::crypto;

// Receiver-side derivation written against the streaming hash API with the
// id/counter fields encoded independently of derive_token.
RetrievalToken receiver_side_token(const SymKey& sk, std::uint64_t me, std::uint64_t buddy,
                                   std::uint64_t counter) {
  crypto_generichash_state st;
  crypto_generichash_init(&st, sk.data(), sk.size(), 8);
  for (std::uint64_t field : {me, buddy, counter}) {
    std::uint8_t be[8];
    for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(field >> (56 - 8 * i));
    crypto_generichash_update(&st, be, 8);
  }
  std::uint8_t out[8];
  crypto_generichash_final(&st, out, 8);
  std::uint64_t v = 0;
  for (auto b : out) v = (v << 8) | b;
  return RetrievalToken{v};
}

TEST(Token, KnownAnswer) {
  SymKey k;
  std::iota(k.begin(), k.end(), 0);
  // Independent BLAKE2b reference (Python hashlib, key = 00..1f, digest_size 8).
  EXPECT_EQ(derive_token(k, ClientId{0x0102030405060708}, ClientId{42}, 7).value,
            0x8d36aa844b61a577ULL);
}

TEST(Token, Deterministic) {
  Rng rng(1);
  const auto k = random_key(rng);
  EXPECT_EQ(derive_token(k, ClientId{1}, ClientId{2}, 0), derive_token(k, ClientId{1}, ClientId{2}, 0));
}

TEST(Token, DistinctAcrossCounters) {
  Rng rng(2);
  const auto k = random_key(rng);
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t c = 0; c < 100000; ++c)
    ASSERT_TRUE(seen.insert(derive_token(k, ClientId{5}, ClientId{9}, c).value).second) << c;
}

TEST(Token, SenderAndReceiverAgree) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto k = random_key(rng);
    const std::uint64_t receiver = rng(), sender = rng(), counter = rng.uniform(1000);
    ASSERT_EQ(derive_token(k, ClientId{receiver}, ClientId{sender}, counter),
              receiver_side_token(k, receiver, sender, counter));
  }
}

TEST(Token, DirectionMatters) {
  Rng rng(4);
  const auto k = random_key(rng);
  EXPECT_NE(derive_token(k, ClientId{1}, ClientId{2}, 0), derive_token(k, ClientId{2}, ClientId{1}, 0));
}

TEST(Seal, RoundTrip) {
  Rng rng(5);
  const auto kp = KeyPair::generate(rng);
  Bytes pt(96);
  rng.fill(pt);
  const auto ct = seal(pt, kp.pk, rng);
  EXPECT_EQ(ct.size(), pt.size() + kSealOverhead);
  auto back = unseal(ct, kp);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, pt);
}

TEST(Seal, InteroperatesWithLibraryBox) {
  Rng rng(6);
  const auto kp = KeyPair::generate(rng);
  Bytes pt{1, 2, 3, 4};
  Bytes ct(pt.size() + crypto_box_SEALBYTES);
  crypto_box_seal(ct.data(), pt.data(), pt.size(), kp.pk.data());
  EXPECT_EQ(unseal(ct, kp), pt);
}

TEST(Seal, TamperRejected) {
  Rng rng(7);
  const auto kp = KeyPair::generate(rng);
  Bytes pt(96, 0xab);
  for (std::size_t pos : {0UL, 40UL, 100UL, 143UL}) {
    auto ct = seal(pt, kp.pk, rng);
    ct[pos] ^= 1;
    EXPECT_FALSE(unseal(ct, kp).has_value()) << pos;
  }
  EXPECT_FALSE(unseal(Bytes(10), kp).has_value());
  const auto other = KeyPair::generate(rng);
  EXPECT_FALSE(unseal(seal(pt, kp.pk, rng), other).has_value());
}

TEST(Seal, Randomized) {
  Rng rng(8);
  const auto kp = KeyPair::generate(rng);
  Bytes pt(96, 1);
  std::set<Bytes> seen;
  for (int i = 0; i < 100; ++i) ASSERT_TRUE(seen.insert(seal(pt, kp.pk, rng)).second);
}

TEST(Seal, SystemRandomnessAlsoRoundTrips) {
  Rng rng;
  const auto kp = KeyPair::generate(rng);
  Bytes pt(5, 9);
  EXPECT_EQ(unseal(seal(pt, kp.pk, rng), kp), pt);
  EXPECT_EQ(KeyPair::from_secret(kp.sk).pk, kp.pk);
}

TEST(Aead, RoundTripAndTamper) {
  Rng rng(9);
  const auto k = random_key(rng);
  const Bytes pt(256, 7), ad{1, 2};
  auto ct = aead_encrypt(k, pt, ad, rng);
  EXPECT_EQ(ct.size(), pt.size() + kAeadOverhead);
  EXPECT_EQ(aead_decrypt(k, ct, ad), pt);
  EXPECT_FALSE(aead_decrypt(k, ct, Bytes{1, 3}).has_value());
  ct[30] ^= 0x80;
  EXPECT_FALSE(aead_decrypt(k, ct, ad).has_value());
  EXPECT_FALSE(aead_decrypt(k, Bytes(39), ad).has_value());
}

TEST(Aead, NoNonceRepeats) {
  Rng rng(10);
  const auto k = random_key(rng);
  std::set<Bytes> nonces;
  const Bytes pt(8, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto ct = aead_encrypt(k, pt, {}, rng);
    ASSERT_TRUE(nonces.insert(Bytes(ct.begin(), ct.begin() + kNonceLen)).second);
  }
}

TEST(Rng, SeededStreamsReplay) {
  Rng a(11), b(11), c(12);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    ASSERT_EQ(x, b());
    (void)c;
  }
  Rng d(11), e(12);
  EXPECT_NE(d(), e());
  Rng f(11);
  auto g = f.fork();
  auto h = f.fork();
  EXPECT_NE(g(), h());
}

TEST(Rng, UniformCoversRange) {
  Rng rng(13);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[rng.uniform(7)];
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Hex, RoundTrip) {
  const Bytes b{0x00, 0xff, 0x1a};
  EXPECT_EQ(to_hex(b), "00ff1a");
  EXPECT_EQ(from_hex("00ff1a"), b);
  EXPECT_FALSE(from_hex("0g").has_value());
  EXPECT_FALSE(from_hex("abc").has_value());
  EXPECT_FALSE((array_from_hex<4>("00ff1a").has_value()));
}

}  // namespace
