#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pingpong/crypto.hpp"
#include "pingpong/obliv.hpp"

namespace pingpong::router {

using obliv::AccessTrace;
using obliv::OpKind;
using obliv::Word;

class BinOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BinPlan {
  std::size_t B = 1;
  std::size_t Z = 0;
  std::uint32_t lambda = 128;
};

// Smallest z with B * P[Binomial(n, 1/B) > z] <= 2^-lambda. The tail is summed
// exactly in log space with extended precision, from the top term down.
inline std::size_t compute_bound(std::size_t n, std::size_t B, std::uint32_t lambda = 128) {
  if (n == 0) return 0;
  if (B <= 1) return n;
  using LD = long double;
  const LD p = 1.0L / static_cast<LD>(B);
  const LD log_p = std::log(p);
  const LD log_q = std::log1p(-p);
  const LD log_n_fact = std::lgamma(static_cast<LD>(n) + 1);
  const LD budget = -static_cast<LD>(lambda) * std::log(2.0L) - std::log(static_cast<LD>(B));
  auto log_term = [&](std::size_t j) {
    const LD lj = static_cast<LD>(j);
    return log_n_fact - std::lgamma(lj + 1) - std::lgamma(static_cast<LD>(n - j) + 1) + lj * log_p +
           static_cast<LD>(n - j) * log_q;
  };
  LD log_tail = -std::numeric_limits<LD>::infinity();  // log P[X > z], starting at z = n
  for (std::size_t z = n; z-- > 0;) {
    const LD t = log_term(z + 1);
    const LD hi = std::max(log_tail, t);
    log_tail = hi + std::log1p(std::exp(std::min(log_tail, t) - hi));
    if (log_tail > budget) return z + 1;
  }
  return 0;
}

// Public bin hash: fixed seed, so any node computes the same assignment.
inline const crypto::HashSeed& public_seed() {
  static const crypto::HashSeed seed = [] {
    crypto::HashSeed s{};
    const char tag[] = "pingpong-bin-v1";
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint8_t>(tag[i % (sizeof tag - 1)]);
    return s;
  }();
  return seed;
}

inline Word bin_of_word(Word key, std::size_t B) { return crypto::keyed_hash(public_seed(), key) % B; }

inline Word bin_of_label(const std::array<Word, 4>& label, std::size_t B) {
  std::array<std::uint8_t, 32> b;
  for (std::size_t i = 0; i < 4; ++i) put_u64_be(b.data() + 8 * i, label[i]);
  return crypto::keyed_hash(public_seed(), b) % B;
}

// Item classes, in sort order inside a bin: real data first, then droppable
// dummies, then fillers.
inline constexpr Word kReal = 0;
inline constexpr Word kDummy = 1;
inline constexpr Word kFiller = 2;

namespace detail {

template <obliv::Record T>
struct Routed {
  Word bin;
  Word cls;
  T item;
};

}  // namespace detail

// Splits `items` into B sub-batches of exactly Z entries each:
//   1. append B*Z fillers, Z per bin;
//   2. osort by (bin, class);
//   3. scan, keeping the first Z entries of each bin;
//   4. ocompact the kept entries to the front.
// `bin[i]` and `cls[i]` describe items[i]. A real item past position Z of its
// bin is an overflow (probability <= 2^-lambda under the plan) and aborts the
// round. `filler` is copied into every padding slot and must be tagged
// kFiller by the caller's own conventions.
template <obliv::Record T>
std::vector<std::vector<T>> oblivious_bin_assign(std::span<const T> items, std::span<const Word> bin,
                                                 std::span<const Word> cls, std::size_t B, std::size_t Z,
                                                 const T& filler, AccessTrace* trace = nullptr) {
  PINGPONG_EXPECTS(items.size() == bin.size() && items.size() == cls.size());
  PINGPONG_EXPECTS(B >= 1);
  using R = detail::Routed<T>;
  const std::size_t n = items.size();
  std::vector<R> all(n + B * Z);
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = R{bin[i], cls[i], items[i]};
    obliv::note(trace, OpKind::scan_read, i);
  }
  for (std::size_t j = 0; j < B * Z; ++j) all[n + j] = R{j / Z, kFiller, filler};

  obliv::osort(all, [](const R& r) { return std::array<Word, 2>{r.bin, r.cls}; }, trace);

  std::vector<Word> keep(all.size());
  Word prev = ~Word{0};
  Word rank = 0;
  Word overflow = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    rank = obliv::obl_choose(obliv::obl_eq(all[i].bin, prev), rank + 1, 0);
    prev = all[i].bin;
    keep[i] = obliv::obl_lt(rank, Z);
    overflow |= obliv::obl_not(keep[i]) & obliv::obl_eq(all[i].cls, kReal);
    obliv::note(trace, OpKind::scan_read, i);
  }
  if (overflow) throw BinOverflowError("sub-batch overflow: a backend received more than Z real items");

  obliv::ocompact(std::span<R>(all), std::span<const Word>(keep), trace);
  std::vector<std::vector<T>> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    out[b].reserve(Z);
    for (std::size_t j = 0; j < Z; ++j) out[b].push_back(all[b * Z + j].item);
  }
  return out;
}

template <obliv::Record T>
std::vector<std::vector<T>> oblivious_bin_assign(const std::vector<T>& items, const std::vector<Word>& bin,
                                                 const std::vector<Word>& cls, std::size_t B, std::size_t Z,
                                                 const T& filler, AccessTrace* trace = nullptr) {
  return oblivious_bin_assign(std::span<const T>(items), std::span<const Word>(bin), std::span<const Word>(cls),
                              B, Z, filler, trace);
}

// Restores per-request order after a scatter/gather: `results` carry their
// origin position (or kNoOrigin for padding); output slot p receives the
// result that originated at p, zero records where none came back.
inline constexpr Word kNoOrigin = ~Word{0};

template <obliv::Record T, class OriginFn>
std::vector<T> restore_order(std::vector<T> results, OriginFn origin_of, std::size_t n,
                             AccessTrace* trace = nullptr) {
  obliv::osort(results, [&](const T& r) { return origin_of(r); }, trace);
  std::vector<Word> valid(results.size()), dest(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Word o = origin_of(results[i]);
    valid[i] = obliv::obl_lt(o, n);
    dest[i] = obliv::obl_choose(valid[i], o, 0);
  }
  auto out = obliv::odistribute<T>(results, valid, dest, std::max(n, results.size()), trace);
  out.resize(n);
  return out;
}

}  // namespace pingpong::router
