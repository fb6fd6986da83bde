#pragma once

#include <bit>
#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "pingpong/obliv/primitives.hpp"
#include "pingpong/obliv/trace.hpp"

namespace pingpong::obliv {

// Bitonic sorting network over a power-of-two range. The compare-and-swap
// schedule is fixed by the length; `less(x, y)` must return 1 iff x < y and
// must itself be branch-free. Pairs are visited in the order
// (stage k, sub-stage j, ascending i), one compare_swap event per pair.
template <Record T, class Less>
void bitonic_sort_pow2(std::span<T> a, Less less, AccessTrace* trace = nullptr) {
  const std::size_t n = a.size();
  PINGPONG_EXPECTS(n == 0 || std::has_single_bit(n));
  for (std::size_t k = 2; k <= n; k <<= 1) {
    for (std::size_t j = k >> 1; j > 0; j >>= 1) {
      for (std::size_t base = 0; base < n; base += 2 * j) {
        const bool ascending = (base & k) == 0;
        if (trace != nullptr && kTraceEnabled) {
          for (std::size_t i = base; i < base + j; ++i) {
            const Word sw = ascending ? less(a[i + j], a[i]) : less(a[i], a[i + j]);
            obl_swap(sw, a[i], a[i + j]);
            trace->record(OpKind::compare_swap, i, i + j);
          }
        } else {
          for (std::size_t i = base; i < base + j; ++i) {
            const Word sw = ascending ? less(a[i + j], a[i]) : less(a[i], a[i + j]);
            obl_swap(sw, a[i], a[i + j]);
          }
        }
      }
    }
  }
}

// Word specialization: min/max arithmetic, friendlier to auto-vectorization.
inline void bitonic_sort_words(std::span<Word> a, AccessTrace* trace = nullptr) {
  const std::size_t n = a.size();
  PINGPONG_EXPECTS(n == 0 || std::has_single_bit(n));
  for (std::size_t k = 2; k <= n; k <<= 1) {
    for (std::size_t j = k >> 1; j > 0; j >>= 1) {
      for (std::size_t base = 0; base < n; base += 2 * j) {
        const Word desc = (base & k) == 0 ? 0 : 1;
        for (std::size_t i = base; i < base + j; ++i) {
          const Word x = a[i];
          const Word y = a[i + j];
          const Word lo = obl_min(x, y);
          const Word hi = obl_max(x, y);
          a[i] = obl_choose(desc, hi, lo);
          a[i + j] = obl_choose(desc, lo, hi);
        }
        if (trace != nullptr && kTraceEnabled)
          for (std::size_t i = base; i < base + j; ++i) trace->record(OpKind::compare_swap, i, i + j);
      }
    }
  }
}

namespace detail {

template <class K, Record T>
struct SortSlot {
  Word pad;
  K key;
  Word idx;
  T rec;
};

}  // namespace detail

// Oblivious sort, ascending by `key_of(record)`. Pads to the next power of two
// with sentinel slots that order after every real record, and appends the
// original index as the lowest-order key so equal keys keep input order.
template <Record T, class KeyFn>
void osort(std::span<T> seq, KeyFn key_of, AccessTrace* trace = nullptr) {
  using K = std::remove_cvref_t<std::invoke_result_t<KeyFn, const T&>>;
  static_assert(SortKey<K>, "key must be a Word or std::array<Word, N>");
  using Slot = detail::SortSlot<K, T>;
  const std::size_t n = seq.size();
  if (n <= 1) return;
  const std::size_t padded = std::bit_ceil(n);
  std::vector<Slot> slots(padded);
  for (std::size_t i = 0; i < n; ++i) slots[i] = Slot{0, key_of(seq[i]), i, seq[i]};
  for (std::size_t i = n; i < padded; ++i) {
    slots[i].pad = 1;
    slots[i].key = KeyTraits<K>::max();
    slots[i].idx = i;
  }
  auto less = [](const Slot& x, const Slot& y) -> Word {
    const auto [pad_lt, pad_eq] = KeyTraits<Word>::compare(x.pad, y.pad);
    const auto [key_lt, key_eq] = KeyTraits<K>::compare(x.key, y.key);
    const Word idx_lt = obl_lt(x.idx, y.idx);
    return pad_lt | (pad_eq & (key_lt | (key_eq & idx_lt)));
  };
  bitonic_sort_pow2(std::span<Slot>(slots), less, trace);
  for (std::size_t i = 0; i < n; ++i) seq[i] = slots[i].rec;
}

template <Record T, class KeyFn>
void osort(std::vector<T>& seq, KeyFn key_of, AccessTrace* trace = nullptr) {
  osort(std::span<T>(seq), key_of, trace);
}

}  // namespace pingpong::obliv
