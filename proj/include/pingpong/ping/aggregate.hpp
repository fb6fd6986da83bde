#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pingpong/obliv.hpp"
#include "pingpong/protocol/wire.hpp"
#include "pingpong/rng.hpp"
#include "pingpong/types.hpp"

namespace pingpong::ping {

using obliv::AccessTrace;
using obliv::OpKind;
using obliv::Word;
using protocol::NotfVec;

struct AggPacket {
  Label label{};
  NotfVec vec{};
  Word is_carrier = 0;
  Word is_dummy = 0;
  Word backend_bin = 0;
  Word origin = 0;  // owner of a carrier (client slot or entry node), opaque here
};

inline AggPacket carrier_for(const Label& label, Word origin) {
  AggPacket p;
  p.label = label;
  p.is_carrier = 1;
  p.origin = origin;
  return p;
}

inline AggPacket blank_packet() { return AggPacket{}; }

inline std::array<Word, 5> label_carrier_key(const AggPacket& p) {
  return {p.label[0], p.label[1], p.label[2], p.label[3], p.is_carrier};
}

// OR of each label group folded forward: after the call, the last packet of
// every run of equal labels holds the OR of the whole run. Labels of dummy
// predecessors are left in place.
inline void or_fold_scan(std::span<AggPacket> pkts, AccessTrace* trace) {
  for (std::size_t i = 1; i < pkts.size(); ++i) {
    const Word same = obliv::obl_equal(pkts[i].label, pkts[i - 1].label);
    const Word m = obliv::mask_of(same);
    for (std::size_t w = 0; w < pkts[i].vec.size(); ++w) pkts[i].vec[w] |= pkts[i - 1].vec[w] & m;
    obliv::note(trace, OpKind::scan_read, i);
  }
}

// Sort by (label, is_carrier), fold, and compact the carriers to the front.
// Returns the number of carriers; the output prefix holds them in label order
// with their aggregated vectors.
inline std::size_t oblivious_aggregate(std::span<AggPacket> pkts, AccessTrace* trace = nullptr) {
  obliv::osort(pkts, label_carrier_key, trace);
  or_fold_scan(pkts, trace);
  std::vector<Word> keep(pkts.size());
  for (std::size_t i = 0; i < pkts.size(); ++i) keep[i] = pkts[i].is_carrier;
  return obliv::ocompact(pkts, std::span<const Word>(keep), trace);
}

inline std::size_t oblivious_aggregate(std::vector<AggPacket>& pkts, AccessTrace* trace = nullptr) {
  return oblivious_aggregate(std::span<AggPacket>(pkts), trace);
}

// Entry-node deduplication before routing: afterwards each label appears on
// at most one non-dummy packet, which carries the OR of its group. Every
// predecessor in a group gets a fresh random label and is_dummy = 1, so the
// packet count is unchanged.
inline void entry_dedup(std::span<AggPacket> pkts, Rng& rng, AccessTrace* trace = nullptr) {
  obliv::osort(pkts, [](const AggPacket& p) { return p.label; }, trace);
  Label prev = pkts.empty() ? Label{} : pkts[0].label;
  for (std::size_t i = 1; i < pkts.size(); ++i) {
    const Word same = obliv::obl_equal(pkts[i].label, prev);
    const Word m = obliv::mask_of(same);
    for (std::size_t w = 0; w < pkts[i].vec.size(); ++w) pkts[i].vec[w] |= pkts[i - 1].vec[w] & m;
    prev = pkts[i].label;
    const Label fresh{rng(), rng(), rng(), rng()};
    for (std::size_t w = 0; w < 4; ++w) pkts[i - 1].label[w] = obliv::obl_choose(same, fresh[w], pkts[i - 1].label[w]);
    pkts[i - 1].is_dummy |= same;
    obliv::note(trace, OpKind::scan_read, i);
  }
}

}  // namespace pingpong::ping
