#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <span>
#include <type_traits>

#include "pingpong/obliv/trace.hpp"

// Branch-free building blocks. Flags are 64-bit words holding 0 or 1; every
// routine executes the same instruction sequence regardless of flag or data.

namespace pingpong::obliv {

[[noreturn]] inline void contract_violation(const char* what, const char* file, int line) {
  std::fprintf(stderr, "contract violation: %s (%s:%d)\n", what, file, line);
  std::abort();
}

#define PINGPONG_EXPECTS(cond) \
  ((cond) ? static_cast<void>(0) : ::pingpong::obliv::contract_violation(#cond, __FILE__, __LINE__))

using Word = std::uint64_t;

// All-ones when flag == 1, zero when flag == 0.
inline constexpr Word mask_of(Word flag) { return Word{0} - (flag & 1U); }

inline constexpr Word obl_choose(Word flag, Word a, Word b) {
  const Word m = mask_of(flag);
  return (a & m) | (b & ~m);
}

inline constexpr Word obl_not(Word flag) { return (flag & 1U) ^ 1U; }

// 1 iff x == 0.
inline constexpr Word obl_is_zero(Word x) { return ((x | (Word{0} - x)) >> 63) ^ 1U; }

inline constexpr Word obl_eq(Word a, Word b) { return obl_is_zero(a ^ b); }

// Unsigned a < b without a data-dependent branch.
inline constexpr Word obl_lt(Word a, Word b) {
  return ((~a & b) | (~(a ^ b) & (a - b))) >> 63;
}

inline constexpr Word obl_min(Word a, Word b) { return obl_choose(obl_lt(a, b), a, b); }
inline constexpr Word obl_max(Word a, Word b) { return obl_choose(obl_lt(a, b), b, a); }

// Element-wise choose over equal-length word sequences.
inline void obl_choose(Word flag, std::span<const Word> a, std::span<const Word> b,
                       std::span<Word> out, AccessTrace* trace = nullptr) {
  PINGPONG_EXPECTS(a.size() == b.size() && out.size() == a.size());
  const Word m = mask_of(flag);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] & m) | (b[i] & ~m);
  note(trace, OpKind::choose, a.size());
}

inline Word obl_equal(std::span<const Word> a, std::span<const Word> b,
                      AccessTrace* trace = nullptr) {
  PINGPONG_EXPECTS(a.size() == b.size());
  Word acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc |= a[i] ^ b[i];
  note(trace, OpKind::equal, a.size());
  return obl_is_zero(acc);
}

template <std::size_t N>
inline constexpr Word obl_equal(const std::array<Word, N>& a, const std::array<Word, N>& b) {
  Word acc = 0;
  for (std::size_t i = 0; i < N; ++i) acc |= a[i] ^ b[i];
  return obl_is_zero(acc);
}

template <class T>
concept Record = std::is_trivially_copyable_v<T>;

// Conditionally swaps two records through word-wide masking.
template <Record T>
inline void obl_swap(Word flag, T& x, T& y) {
  const Word m = mask_of(flag);
  auto* px = reinterpret_cast<unsigned char*>(&x);
  auto* py = reinterpret_cast<unsigned char*>(&y);
  constexpr std::size_t kWords = sizeof(T) / sizeof(Word);
  for (std::size_t i = 0; i < kWords; ++i) {
    Word a, b;
    std::memcpy(&a, px + i * sizeof(Word), sizeof(Word));
    std::memcpy(&b, py + i * sizeof(Word), sizeof(Word));
    const Word d = (a ^ b) & m;
    a ^= d;
    b ^= d;
    std::memcpy(px + i * sizeof(Word), &a, sizeof(Word));
    std::memcpy(py + i * sizeof(Word), &b, sizeof(Word));
  }
  const auto mb = static_cast<unsigned char>(m);
  for (std::size_t i = kWords * sizeof(Word); i < sizeof(T); ++i) {
    const unsigned char d = (px[i] ^ py[i]) & mb;
    px[i] ^= d;
    py[i] ^= d;
  }
}

// dst = flag ? src : dst
template <Record T>
inline void obl_assign(Word flag, T& dst, const T& src) {
  const Word m = mask_of(flag);
  auto* pd = reinterpret_cast<unsigned char*>(&dst);
  const auto* ps = reinterpret_cast<const unsigned char*>(&src);
  constexpr std::size_t kWords = sizeof(T) / sizeof(Word);
  for (std::size_t i = 0; i < kWords; ++i) {
    Word a, b;
    std::memcpy(&a, pd + i * sizeof(Word), sizeof(Word));
    std::memcpy(&b, ps + i * sizeof(Word), sizeof(Word));
    a = (b & m) | (a & ~m);
    std::memcpy(pd + i * sizeof(Word), &a, sizeof(Word));
  }
  const auto mb = static_cast<unsigned char>(m);
  for (std::size_t i = kWords * sizeof(Word); i < sizeof(T); ++i)
    pd[i] = static_cast<unsigned char>((ps[i] & mb) | (pd[i] & ~mb));
}

template <Record T>
inline T obl_select(Word flag, const T& a, const T& b) {
  T out = b;
  obl_assign(flag, out, a);
  return out;
}

// Sort keys: unsigned words or fixed-length word arrays compared
// lexicographically (index 0 most significant).
template <class K>
struct KeyTraits;

template <>
struct KeyTraits<Word> {
  static constexpr Word max() { return ~Word{0}; }
  // Returns {a < b, a == b}.
  static constexpr std::array<Word, 2> compare(Word a, Word b) { return {obl_lt(a, b), obl_eq(a, b)}; }
};

template <std::size_t N>
struct KeyTraits<std::array<Word, N>> {
  static constexpr std::array<Word, N> max() {
    std::array<Word, N> k{};
    for (auto& w : k) w = ~Word{0};
    return k;
  }
  static constexpr std::array<Word, 2> compare(const std::array<Word, N>& a,
                                               const std::array<Word, N>& b) {
    Word lt = 0;
    Word eq = 1;
    for (std::size_t i = 0; i < N; ++i) {
      lt |= eq & obl_lt(a[i], b[i]);
      eq &= obl_eq(a[i], b[i]);
    }
    return {lt, eq};
  }
};

template <class K>
concept SortKey = requires { KeyTraits<K>::max(); };

}  // namespace pingpong::obliv
