#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pingpong/rng.hpp"

namespace pingpong::harness {

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct TraceRecord {
  std::uint32_t sender = 0;
  std::uint32_t receiver = 0;
  std::int64_t ts = 0;
};

struct MsgTrace {
  std::vector<TraceRecord> records;  // sorted by timestamp, stable
  std::vector<std::uint64_t> original_ids;  // dense id -> id in the file
  std::size_t users() const { return original_ids.size(); }
  std::size_t messages() const { return records.size(); }
};

// Whitespace-separated `SRC DST UNIXTIME` lines. Blank lines and lines
// starting with '#' or '%' are skipped.
inline MsgTrace parse_trace(std::istream& in) {
  struct Raw {
    std::uint64_t s, d;
    std::int64_t t;
  };
  std::vector<Raw> raw;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '%') continue;
    std::istringstream ls(line);
    Raw r{};
    std::string extra;
    if (!(ls >> r.s >> r.d >> r.t)) throw TraceParseError(no, "expected `SRC DST UNIXTIME`");
    if (ls >> extra) throw TraceParseError(no, "trailing field '" + extra + "'");
    raw.push_back(r);
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.t < b.t; });

  std::map<std::uint64_t, std::uint32_t> dense;
  for (const auto& r : raw) {
    dense.emplace(r.s, 0);
    dense.emplace(r.d, 0);
  }
  MsgTrace t;
  for (auto& [orig, id] : dense) {
    id = static_cast<std::uint32_t>(t.original_ids.size());
    t.original_ids.push_back(orig);
  }
  t.records.reserve(raw.size());
  for (const auto& r : raw) t.records.push_back({dense.at(r.s), dense.at(r.d), r.t});
  return t;
}

inline MsgTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  return parse_trace(in);
}

// ---- dial-before-conversation model ----

struct DialResult {
  double avg_latency = 0;
  double conflict_fraction = 0;
  std::size_t conversations = 0;
  std::size_t waited = 0;
  std::vector<double> latencies;
};

// Each recipient holds one conversation at a time for window_s seconds. A
// message joins the sender's open conversation with that recipient if one
// is scheduled and not yet over; otherwise a new conversation is queued at
// the recipient's next free time.
inline DialResult simulate_dial(const MsgTrace& trace, double window_s, double dial_latency_s = 0.0,
                                double conv_latency_s = 0.5) {
  struct Conv {
    std::uint32_t sender;
    double start, end;
  };
  std::vector<std::deque<Conv>> sched(trace.users());
  DialResult out;
  out.latencies.reserve(trace.messages());
  double sum = 0;
  for (const auto& r : trace.records) {
    const auto t = static_cast<double>(r.ts);
    auto& q = sched[r.receiver];
    while (!q.empty() && q.front().end <= t) q.pop_front();
    double start = 0;
    auto open = std::find_if(q.begin(), q.end(), [&](const Conv& c) { return c.sender == r.sender; });
    if (open != q.end()) {
      start = std::max(open->start, t);
    } else {
      start = q.empty() ? t : std::max(t, q.back().end);
      ++out.conversations;
      if (start > t) ++out.waited;
      q.push_back({r.sender, start, start + window_s});
      start += dial_latency_s;
    }
    const double lat = start - t + conv_latency_s;
    out.latencies.push_back(lat);
    sum += lat;
  }
  if (!out.latencies.empty()) out.avg_latency = sum / static_cast<double>(out.latencies.size());
  if (out.conversations) out.conflict_fraction = static_cast<double>(out.waited) / static_cast<double>(out.conversations);
  return out;
}

// ---- notify-before-retrieval model ----

struct NotifyOptions {
  double proc_latency_s = 3.0;
  double round_s = 0.5;
  bool jitter = true;  // spread whole-second timestamps uniformly over their second
  std::uint64_t seed = 1;
};

struct NotifyResult {
  double avg_latency = 0;
  double avg_alignment = 0;
  double avg_queue = 0;
  std::size_t queued = 0;  // messages that waited at least one extra round
  std::vector<double> latencies;
};

// A message leaves at the sender's next free round boundary (one real message
// per sender per round), its notification lands in that round's digest, and
// the recipient fetches one token per round from the following round on.
inline NotifyResult simulate_notify(const MsgTrace& trace, const NotifyOptions& opt = {}) {
  Rng rng(opt.seed);
  std::vector<std::int64_t> send_next(trace.users(), INT64_MIN), read_next(trace.users(), INT64_MIN);
  NotifyResult out;
  out.latencies.reserve(trace.messages());
  double sum = 0, align_sum = 0, queue_sum = 0;
  for (const auto& r : trace.records) {
    const double t = static_cast<double>(r.ts) + (opt.jitter ? rng.unit() : 0.0);
    const auto boundary = static_cast<std::int64_t>(std::ceil(t / opt.round_s - 1e-9));
    const double align = static_cast<double>(boundary) * opt.round_s - t;
    const std::int64_t send_round = std::max(boundary, send_next[r.sender]);
    send_next[r.sender] = send_round + 1;
    const std::int64_t read_round = std::max(send_round + 1, read_next[r.receiver]);
    read_next[r.receiver] = read_round + 1;
    const auto extra_rounds = (send_round - boundary) + (read_round - send_round - 1);
    const double queue = static_cast<double>(extra_rounds) * opt.round_s;
    const double lat = opt.proc_latency_s + std::max(0.0, align) + queue;
    if (extra_rounds > 0) ++out.queued;
    out.latencies.push_back(lat);
    sum += lat;
    align_sum += std::max(0.0, align);
    queue_sum += queue;
  }
  if (const auto n = static_cast<double>(out.latencies.size()); n > 0) {
    out.avg_latency = sum / n;
    out.avg_alignment = align_sum / n;
    out.avg_queue = queue_sum / n;
  }
  return out;
}

}  // namespace pingpong::harness
