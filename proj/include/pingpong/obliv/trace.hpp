#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

// Access-pattern recording for the oblivious primitives.
//
// Every primitive takes an optional `AccessTrace*`. A null handle records
// nothing. Events carry positions and sizes only, never data values, so two
// runs over inputs of the same shape must produce byte-identical traces.
//
// Defining PINGPONG_NO_TRACE compiles all recording out.

namespace pingpong::obliv {

#ifdef PINGPONG_NO_TRACE
inline constexpr bool kTraceEnabled = false;
#else
inline constexpr bool kTraceEnabled = true;
#endif

enum class OpKind : std::uint8_t {
  compare_swap = 0,
  scan_read = 1,
  scan_write = 2,
  choose = 3,
  equal = 4,
};

inline constexpr std::uint64_t kNoPos = std::numeric_limits<std::uint64_t>::max();

struct TraceEvent {
  OpKind kind;
  std::uint64_t a;
  std::uint64_t b;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

class AccessTrace {
 public:
  enum class Mode { record, count };

  explicit AccessTrace(Mode mode = Mode::record) : mode_(mode) {}

  void record(OpKind kind, std::uint64_t a, std::uint64_t b = kNoPos) {
    ++counts_[static_cast<std::size_t>(kind)];
    if (mode_ == Mode::record) events_.push_back({kind, a, b});
  }

  void append(const AccessTrace& other) {
    for (std::size_t i = 0; i < kKinds; ++i) counts_[i] += other.counts_[i];
    if (mode_ == Mode::record)
      events_.insert(events_.end(), other.events_.begin(), other.events_.end());
  }

  const std::vector<TraceEvent>& events() const { return events_; }
  std::uint64_t count(OpKind kind) const { return counts_[static_cast<std::size_t>(kind)]; }
  std::uint64_t total_ops() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }
  Mode mode() const { return mode_; }

  void clear() {
    events_.clear();
    for (auto& c : counts_) c = 0;
  }

  // Canonical serialization: 17 bytes per event, little-endian positions.
  std::vector<std::uint8_t> bytes() const {
    std::vector<std::uint8_t> out;
    out.reserve(events_.size() * 17);
    for (const auto& e : events_) {
      out.push_back(static_cast<std::uint8_t>(e.kind));
      for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(e.a >> s));
      for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(e.b >> s));
    }
    return out;
  }

  friend bool operator==(const AccessTrace& x, const AccessTrace& y) {
    if (x.mode_ == Mode::record && y.mode_ == Mode::record) return x.events_ == y.events_;
    for (std::size_t i = 0; i < kKinds; ++i)
      if (x.counts_[i] != y.counts_[i]) return false;
    return true;
  }

 private:
  static constexpr std::size_t kKinds = 5;
  Mode mode_;
  std::vector<TraceEvent> events_;
  std::uint64_t counts_[kKinds] = {};
};

inline void note(AccessTrace* trace, OpKind kind, std::uint64_t a, std::uint64_t b = kNoPos) {
  if constexpr (kTraceEnabled) {
    if (trace != nullptr) trace->record(kind, a, b);
  }
}

// Index of the first differing event, or kNoPos if the traces are identical.
inline std::uint64_t first_divergence(const AccessTrace& x, const AccessTrace& y) {
  const auto& a = x.events();
  const auto& b = y.events();
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!(a[i] == b[i])) return i;
  if (a.size() != b.size()) return n;
  return kNoPos;
}

}  // namespace pingpong::obliv
