#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>

namespace pingpong {

inline void sodium_ready() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

// Randomness source. Default-constructed instances draw from the OS CSPRNG;
// seeded instances expand the seed with a ChaCha20 keystream so simulations
// replay bit-for-bit. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng() { sodium_ready(); }

  explicit Rng(std::uint64_t seed) : seeded_(true) {
    sodium_ready();
    std::array<std::uint8_t, 8> s{};
    std::memcpy(s.data(), &seed, sizeof seed);
    crypto_generichash(key_.data(), key_.size(), s.data(), s.size(), nullptr, 0);
  }

  // Independent child stream, e.g. one per simulated node.
  Rng fork() {
    Rng child;
    if (seeded_) {
      child.seeded_ = true;
      fill(child.key_);
    }
    return child;
  }

  void fill(std::span<std::uint8_t> out) {
    if (!seeded_) {
      randombytes_buf(out.data(), out.size());
      return;
    }
    for (auto& b : out) {
      if (pos_ == block_.size()) refill();
      b = block_[pos_++];
    }
  }

  std::uint64_t operator()() {
    std::uint64_t v;
    fill({reinterpret_cast<std::uint8_t*>(&v), sizeof v});
    return v;
  }

  // Uniform in [0, bound) by rejection; bound > 0.
  std::uint64_t uniform(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do v = (*this)();
    while (v >= limit);
    return v % bound;
  }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool seeded() const { return seeded_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  void refill() {
    std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
    block_.fill(0);
    crypto_stream_chacha20_ietf_xor_ic(block_.data(), block_.data(), block_.size(), nonce.data(),
                                       counter_, key_.data());
    counter_ += block_.size() / 64;  // block counter counts 64-byte ChaCha blocks
    pos_ = 0;
  }

  bool seeded_ = false;
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_KEYBYTES> key_{};
  std::array<std::uint8_t, 256> block_{};
  std::size_t pos_ = 256;
  std::uint32_t counter_ = 0;
};

}  // namespace pingpong
