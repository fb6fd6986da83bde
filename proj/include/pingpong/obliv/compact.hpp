#pragma once

#include <bit>
#include <cstddef>
#include <span>
#include <vector>

#include "pingpong/obliv/primitives.hpp"
#include "pingpong/obliv/trace.hpp"

namespace pingpong::obliv {

namespace detail {

template <Record T>
struct RouteSlot {
  Word live;
  Word dist;
  T rec;
};

inline Word bit_at(Word value, std::size_t level) { return (value >> level) & 1U; }

}  // namespace detail

// Order-preserving compaction. Records tagged 1 in `keep` move to a prefix in
// their original relative order; every other slot is overwritten with a
// zero-initialized record. Returns the number of kept records.
//
// Each kept record shifts left by the number of dropped records before it.
// The shift is applied one bit at a time, low bit first, through a fixed
// log(n)-level network: at level L, slot j is conditionally swapped with
// slot j - 2^L for every j >= 2^L.
template <Record T>
std::size_t ocompact(std::span<T> seq, std::span<const Word> keep, AccessTrace* trace = nullptr) {
  PINGPONG_EXPECTS(seq.size() == keep.size());
  using Slot = detail::RouteSlot<T>;
  const std::size_t n = seq.size();
  std::vector<Slot> slots(n);
  Word dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Word k = keep[i] & 1U;
    slots[i] = Slot{k, dropped, seq[i]};
    dropped += obl_not(k);
    note(trace, OpKind::scan_read, i);
  }
  std::size_t level = 0;
  for (std::size_t step = 1; step < n; step <<= 1, ++level) {
    for (std::size_t j = step; j < n; ++j) {
      const Word flag = slots[j].live & detail::bit_at(slots[j].dist, level);
      obl_swap(flag, slots[j - step], slots[j]);
      note(trace, OpKind::compare_swap, j - step, j);
    }
  }
  const Word kept = static_cast<Word>(n) - dropped;
  const T zero{};
  for (std::size_t i = 0; i < n; ++i) {
    seq[i] = obl_select(obl_lt(i, kept), slots[i].rec, zero);
    note(trace, OpKind::scan_write, i);
  }
  return static_cast<std::size_t>(kept);
}

template <Record T>
std::size_t ocompact(std::vector<T>& seq, const std::vector<Word>& keep, AccessTrace* trace = nullptr) {
  return ocompact(std::span<T>(seq), std::span<const Word>(keep), trace);
}

// Inverse of compaction: spreads a sorted prefix of records out to explicit
// destinations. Requires the records with `valid == 1` to form a prefix whose
// destinations strictly increase, with dest[i] >= i and dest[i] < out_size.
// Output slot dest[i] receives record i; all other slots are zero records.
// The network mirrors ocompact: high bit first, descending j, slot j against
// slot j + 2^L.
template <Record T>
std::vector<T> odistribute(std::span<const T> items, std::span<const Word> valid,
                           std::span<const Word> dest, std::size_t out_size,
                           AccessTrace* trace = nullptr) {
  PINGPONG_EXPECTS(items.size() == valid.size() && items.size() == dest.size());
  using Slot = detail::RouteSlot<T>;
  const std::size_t width = out_size > items.size() ? out_size : items.size();
  std::vector<Slot> slots(width);
  const T zero{};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Word v = valid[i] & 1U;
    slots[i] = Slot{v, obl_choose(v, dest[i] - i, 0), obl_select(v, items[i], zero)};
    note(trace, OpKind::scan_read, i);
  }
  if (width > 1) {
    std::size_t level = static_cast<std::size_t>(std::bit_width(width - 1)) - 1;
    for (std::size_t step = std::size_t{1} << level;; step >>= 1, --level) {
      for (std::size_t j = width - step; j-- > 0;) {
        const Word flag = slots[j].live & detail::bit_at(slots[j].dist, level);
        obl_swap(flag, slots[j], slots[j + step]);
        note(trace, OpKind::compare_swap, j, j + step);
      }
      if (step == 1) break;
    }
  }
  std::vector<T> out(out_size);
  for (std::size_t i = 0; i < out_size; ++i) {
    out[i] = slots[i].rec;
    note(trace, OpKind::scan_write, i);
  }
  return out;
}

}  // namespace pingpong::obliv
