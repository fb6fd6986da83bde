#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pingpong/obliv.hpp"
#include "pingpong/pong/oht.hpp"
#include "pingpong/rng.hpp"

namespace pingpong::pong {

struct StoreOptions {
  std::size_t k = 4;       // batches per OBin
  std::size_t m = 46;      // OBins per OMT
  std::size_t N = 8640;    // stored batches before expiry
  std::size_t c = 1024;    // batch capacity; every batch is padded to c entries
  std::size_t Z = 17;
  double eps = 0.75;
  bool background_merge = false;
};

struct StoreStats {
  std::uint64_t writes = 0;
  std::uint64_t reads = 0;
  std::uint64_t lookups = 0;
  std::uint64_t merges = 0;
  std::uint64_t rebuilds = 0;
  std::uint64_t expired_batches = 0;
};

// Hierarchical oblivious message store.
//
//   Buf   OBins, oldest first. While a group of k batches is filling, each
//         batch gets its own temporary OBin; the k-th batch replaces them
//         with one OBin over the whole group.
//   Stash raw copies of consolidated groups, kept so that m of them can be
//         rebuilt into one OMT without extracting items from padded bins.
//   T     OMTs, oldest first.
//
// A read probes every OBin and every OMT exactly once per request; after a
// hit the remaining probes are dummies.
template <obliv::Record Value>
class PongStore {
 public:
  using Table = Oht<Value>;
  using Result = OhtResult<Value>;

  struct WriteEntry {
    Word key = 0;
    Word dummy = 0;
    Value value{};
  };

  struct ReadEntry {
    Word key = 0;
    Word real = 0;
  };

  PongStore(StoreOptions opt, Rng rng) : opt_(opt), rng_(std::move(rng)) {
    if (opt_.k == 0 || opt_.m == 0 || opt_.c == 0) throw std::invalid_argument("store: k, m, c must be positive");
    if (opt_.m * opt_.k > opt_.N) throw std::invalid_argument("store: m*k must not exceed N");
  }

  ~PongStore() { wait_merge(); }

  PongStore(const PongStore&) = delete;
  PongStore& operator=(const PongStore&) = delete;

  // Foreground events (padding pass + one small build) go to `trace`; OMT
  // builds triggered by this write go to `merge_trace` when run inline.
  void obl_write(std::span<const WriteEntry> batch, AccessTrace* trace = nullptr,
                 AccessTrace* merge_trace = nullptr) {
    if (batch.size() > opt_.c) throw std::length_error("store: batch exceeds capacity c");
    std::vector<Entry> entries(opt_.c);
    for (std::size_t i = 0; i < opt_.c; ++i) {
      // Client dummies become real entries under fresh random keys so the
      // number of inserted items does not depend on who was idle.
      const Word in_batch = obliv::obl_lt(i, batch.size());
      const WriteEntry w = i < batch.size() ? batch[i] : WriteEntry{};
      entries[i] = Entry{obliv::obl_choose(in_batch & obliv::obl_not(w.dummy), w.key, rng_()), in_batch, w.value};
      obliv::note(trace, OpKind::scan_read, i);
    }
    pending_.push_back(std::move(entries));
    ++stats_.writes;

    if (pending_.size() < opt_.k) {
      auto table = std::make_shared<const Table>(build(pending_.back(), trace));
      std::lock_guard lock(mu_);
      buf_.push_back(Container{table, 1, true, 0});
    } else {
      std::vector<Entry> group;
      group.reserve(opt_.k * opt_.c);
      for (auto& b : pending_) group.insert(group.end(), b.begin(), b.end());
      pending_.clear();
      auto table = std::make_shared<const Table>(build(group, trace));
      const std::uint64_t gid = next_group_++;
      {
        std::lock_guard lock(mu_);
        std::erase_if(buf_, [](const Container& c) { return c.temp; });
        buf_.push_back(Container{table, opt_.k, false, gid});
      }
      stash_.push_back(Group{gid, std::move(group)});
      if (stash_.size() >= opt_.m) start_merge(merge_trace);
    }
    expire();
  }

  std::vector<Result> obl_read(std::span<const ReadEntry> requests, AccessTrace* trace = nullptr) {
    std::vector<std::shared_ptr<const Table>> layers;
    {
      std::lock_guard lock(mu_);
      for (const auto& c : buf_) layers.push_back(c.table);
      for (const auto& c : t_) layers.push_back(c.table);
    }
    std::vector<Result> out(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
      Result acc;
      const Word real = requests[i].real & 1U;
      for (const auto& layer : layers) {
        const auto r = layer->lookup(requests[i].key, real & obliv::obl_not(acc.found), rng_, trace);
        obliv::obl_assign(r.found, acc.value, r.value);
        acc.found |= r.found;
      }
      out[i] = acc;
    }
    last_lookups_ = layers.size();
    stats_.reads += requests.size();
    stats_.lookups += requests.size() * layers.size();
    return out;
  }

  // Blocks until an in-flight background merge has committed.
  void wait_merge() {
    if (merge_thread_.joinable()) merge_thread_.join();
    commit_finished_merge();
  }

  std::size_t buf_size() const {
    std::lock_guard lock(mu_);
    return buf_.size();
  }
  std::size_t table_count() const {
    std::lock_guard lock(mu_);
    return t_.size();
  }
  // Probes per read request at the current state: |Buf| + |T|.
  std::size_t layers() const {
    std::lock_guard lock(mu_);
    return buf_.size() + t_.size();
  }
  std::size_t last_read_lookups() const { return last_lookups_; }
  std::size_t stored_batches() const {
    std::lock_guard lock(mu_);
    return stored_locked();
  }
  std::size_t pending_batches() const { return pending_.size(); }
  std::size_t stash_groups() const { return stash_.size(); }
  bool merge_in_flight() const { return job_ != nullptr; }
  StoreStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }
  const StoreOptions& options() const { return opt_; }

 private:
  using Entry = typename Table::Entry;

  struct Container {
    std::shared_ptr<const Table> table;
    std::size_t batches;
    bool temp;
    std::uint64_t group;  // OBins: group id; OMTs: id of the first merged group
  };

  struct Group {
    std::uint64_t id;
    std::vector<Entry> entries;
  };

  struct MergeJob {
    std::vector<std::uint64_t> groups;
    std::shared_ptr<const Table> result;
    int rebuilds = 0;
    std::atomic<bool> done{false};
  };

  Table build(std::span<const Entry> entries, AccessTrace* trace) {
    auto t = Table::build(entries, rng_, typename Table::Options{opt_.Z, opt_.eps}, trace);
    std::lock_guard lock(mu_);
    stats_.rebuilds += static_cast<std::uint64_t>(t.rebuilds());
    return t;
  }

  std::size_t stored_locked() const {
    std::size_t s = 0;
    for (const auto& c : buf_) s += c.batches;
    for (const auto& c : t_) s += c.batches;
    return s;
  }

  void start_merge(AccessTrace* merge_trace) {
    wait_merge();  // at most one merge in flight
    auto job = std::make_shared<MergeJob>();
    std::vector<Entry> all;
    all.reserve(opt_.m * opt_.k * opt_.c);
    for (std::size_t g = 0; g < opt_.m; ++g) {
      job->groups.push_back(stash_.front().id);
      all.insert(all.end(), stash_.front().entries.begin(), stash_.front().entries.end());
      stash_.pop_front();
    }
    job_ = job;
    auto run = [job, entries = std::move(all), opt = opt_](Rng rng, AccessTrace* tr) {
      auto t = Table::build(entries, rng, typename Table::Options{opt.Z, opt.eps}, tr);
      job->rebuilds = t.rebuilds();
      job->result = std::make_shared<const Table>(std::move(t));
      job->done.store(true, std::memory_order_release);
    };
    if (opt_.background_merge) {
      merge_thread_ = std::thread(std::move(run), rng_.fork(), nullptr);
    } else {
      run(rng_.fork(), merge_trace);
      commit_finished_merge();
    }
  }

  void commit_finished_merge() {
    if (!job_ || !job_->done.load(std::memory_order_acquire)) return;
    std::lock_guard lock(mu_);
    const auto& ids = job_->groups;
    std::erase_if(buf_, [&](const Container& c) {
      return !c.temp && std::find(ids.begin(), ids.end(), c.group) != ids.end();
    });
    t_.push_back(Container{job_->result, opt_.m * opt_.k, false, ids.front()});
    stats_.merges += 1;
    stats_.rebuilds += static_cast<std::uint64_t>(job_->rebuilds);
    job_.reset();
  }

  // Drops whole containers, oldest first, until at most N batches remain.
  void expire() {
    commit_finished_merge();
    for (;;) {
      std::unique_lock lock(mu_);
      if (stored_locked() <= opt_.N) return;
      if (!t_.empty()) {
        stats_.expired_batches += t_.front().batches;
        t_.pop_front();
        continue;
      }
      if (job_) {
        // The oldest bins may be inside the running merge; let it land first.
        lock.unlock();
        wait_merge();
        continue;
      }
      const Container victim = buf_.front();
      buf_.pop_front();
      stats_.expired_batches += victim.batches;
      if (victim.temp) {
        pending_.erase(pending_.begin());
      } else {
        std::erase_if(stash_, [&](const Group& g) { return g.id == victim.group; });
      }
    }
  }

  StoreOptions opt_;
  Rng rng_;
  mutable std::mutex mu_;
  std::deque<Container> buf_;
  std::deque<Container> t_;
  std::deque<Group> stash_;
  std::vector<std::vector<Entry>> pending_;  // raw batches of the group being filled
  std::shared_ptr<MergeJob> job_;
  std::thread merge_thread_;
  std::uint64_t next_group_ = 0;
  std::size_t last_lookups_ = 0;
  StoreStats stats_;
};

}  // namespace pingpong::pong
