#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "pingpong/crypto.hpp"
#include "pingpong/obliv.hpp"
#include "pingpong/rng.hpp"

namespace pingpong::pong {

using obliv::AccessTrace;
using obliv::OpKind;
using obliv::Word;

class OhtBuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OhtGeometry {
  std::size_t n = 0;   // capacity (public input size)
  std::size_t Z = 17;
  std::size_t B1 = 1;
  std::size_t B2 = 1;

  static OhtGeometry for_capacity(std::size_t n, std::size_t Z, double eps) {
    OhtGeometry g;
    g.n = n;
    g.Z = Z;
    g.B1 = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(n) / (eps * Z))));
    g.B2 = std::max<std::size_t>(1, (g.B1 + 1) / 2);
    return g;
  }
  std::size_t slots() const { return (B1 + B2) * Z; }
};

template <obliv::Record Value>
struct OhtEntry {
  Word key = 0;
  Word real = 0;  // 0 marks a filler that is not inserted
  Value value{};
};

template <obliv::Record Value>
struct OhtResult {
  Word found = 0;
  Value value{};
};

// Two-tier oblivious hash table. Build places each real key in bucket h1(key)
// of tier 1 when it has room, otherwise in bucket h2(key) of tier 2; every
// bucket holds exactly Z slots, so the table's shape is a function of the
// capacity alone. A lookup linearly scans the Z slots of both candidate
// buckets.
template <obliv::Record Value>
class Oht {
 public:
  using Entry = OhtEntry<Value>;
  using Result = OhtResult<Value>;

  static constexpr int kMaxRebuilds = 8;

  struct Options {
    std::size_t Z = 17;
    double eps = 0.75;
  };

  static Oht build(std::span<const Entry> items, Rng& rng, AccessTrace* trace = nullptr) {
    return build(items, rng, Options{}, trace);
  }

  static Oht build(std::span<const Entry> items, Rng& rng, Options opt, AccessTrace* trace = nullptr) {
    Oht t;
    t.geo_ = OhtGeometry::for_capacity(items.size(), opt.Z, opt.eps);
    for (int attempt = 0; attempt <= kMaxRebuilds; ++attempt) {
      rng.fill(t.seed1_);
      rng.fill(t.seed2_);
      if (t.try_build(items, trace)) return t;
      ++t.rebuilds_;
    }
    throw OhtBuildError("oblivious hash table overflowed on every retry; parameters are unsafe");
  }

  // Probes for `key` when real == 1; with real == 0 the probe key is drawn
  // at random and the result is always not-found. Both cases scan the same
  // 2Z slot offsets.
  Result lookup(Word key, Word real, Rng& rng, AccessTrace* trace = nullptr) const {
    real &= 1U;
    const Word probe = obliv::obl_choose(real, key, rng());
    const std::size_t b1 = bucket(seed1_, probe, geo_.B1);
    const std::size_t b2 = bucket(seed2_, probe, geo_.B2);
    Result r;
    scan(slots_.data() + b1 * geo_.Z, probe, real, r, 0, trace);
    scan(slots_.data() + (geo_.B1 + b2) * geo_.Z, probe, real, r, 1, trace);
    return r;
  }

  const OhtGeometry& geometry() const { return geo_; }
  std::size_t capacity() const { return geo_.n; }
  int rebuilds() const { return rebuilds_; }

 private:
  struct Slot {
    Word key;
    Word occupied;
    Value value;
  };

  struct Tag {
    Word key;
    Word real;
    Word bucket;
    Word dest;
    Word overflow;
    Word idx;
  };

  struct Placed {
    Word dest;
    Word placed;
    Word key;
    Value value;
  };

  static std::size_t bucket(const crypto::HashSeed& seed, Word key, std::size_t count) {
    return static_cast<std::size_t>(crypto::keyed_hash(seed, key) % count);
  }

  // Assigns each tagged item its rank inside its bucket (tags sorted by
  // bucket) and claims slot bucket*Z + rank when rank < Z and `eligible`.
  static void rank_scan(std::vector<Tag>& tags, std::span<const Word> eligible, Word base,
                        std::size_t Z, AccessTrace* trace) {
    Word prev_bucket = ~Word{0};
    Word rank = 0;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      auto& t = tags[i];
      rank = obliv::obl_choose(obliv::obl_eq(t.bucket, prev_bucket), rank + 1, 0);
      prev_bucket = t.bucket;
      const Word fits = obliv::obl_lt(rank, Z);
      const Word take = eligible[i] & fits;
      t.dest = obliv::obl_choose(take, base + t.bucket * Z + rank, t.dest);
      t.overflow = eligible[i] & obliv::obl_not(fits);
      obliv::note(trace, OpKind::scan_read, i);
    }
  }

  bool try_build(std::span<const Entry> items, AccessTrace* trace) {
    const std::size_t n = items.size();
    const std::size_t Z = geo_.Z;
    const Word kUnplaced = ~Word{0};
    std::vector<Tag> tags(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Word real = items[i].real & 1U;
      tags[i] = Tag{items[i].key, real,
                    obliv::obl_choose(real, bucket(seed1_, items[i].key, geo_.B1), geo_.B1),
                    kUnplaced, 0, i};
      obliv::note(trace, OpKind::scan_read, i);
    }
    auto by_bucket = [](const Tag& t) { return t.bucket; };
    std::vector<Word> eligible(n);

    obliv::osort(tags, by_bucket, trace);
    for (std::size_t i = 0; i < n; ++i) eligible[i] = tags[i].real;
    rank_scan(tags, eligible, 0, Z, trace);

    for (std::size_t i = 0; i < n; ++i) {
      eligible[i] = tags[i].overflow;
      tags[i].bucket = obliv::obl_choose(eligible[i], bucket(seed2_, tags[i].key, geo_.B2), geo_.B2);
      obliv::note(trace, OpKind::scan_write, i);
    }
    obliv::osort(tags, by_bucket, trace);
    for (std::size_t i = 0; i < n; ++i) eligible[i] = tags[i].overflow;
    rank_scan(tags, eligible, geo_.B1 * Z, Z, trace);

    // Tier-2 overflow is the only failure. Its occurrence is public (the
    // table is rebuilt), its probability is bounded by 2^-lambda.
    Word failed = 0;
    for (const auto& t : tags) failed |= t.overflow;
    if (failed != 0) return false;

    obliv::osort(tags, [](const Tag& t) { return t.idx; }, trace);

    std::vector<Placed> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Word placed = obliv::obl_not(obliv::obl_eq(tags[i].dest, kUnplaced));
      recs[i] = Placed{tags[i].dest, placed, items[i].key, items[i].value};
      obliv::note(trace, OpKind::scan_read, i);
    }
    obliv::osort(recs, [](const Placed& p) { return p.dest; }, trace);

    std::vector<Slot> src(n);
    std::vector<Word> valid(n), dest(n);
    for (std::size_t i = 0; i < n; ++i) {
      src[i] = Slot{recs[i].key, recs[i].placed, recs[i].value};
      valid[i] = recs[i].placed;
      dest[i] = obliv::obl_choose(recs[i].placed, recs[i].dest, 0);
    }
    slots_ = obliv::odistribute<Slot>(src, valid, dest, geo_.slots(), trace);
    return true;
  }

  void scan(const Slot* b, Word probe, Word real, Result& r, std::uint64_t tier,
            AccessTrace* trace) const {
    for (std::size_t j = 0; j < geo_.Z; ++j) {
      const Word hit = real & b[j].occupied & obliv::obl_eq(b[j].key, probe);
      obliv::obl_assign(hit, r.value, b[j].value);
      r.found |= hit;
      obliv::note(trace, OpKind::scan_read, tier, j);
    }
  }

  OhtGeometry geo_;
  crypto::HashSeed seed1_{};
  crypto::HashSeed seed2_{};
  std::vector<Slot> slots_;
  int rebuilds_ = 0;
};

}  // namespace pingpong::pong
