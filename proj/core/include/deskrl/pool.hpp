#pragma once

#include <cstdint>
#include <mutex>
#include <utility>
#include <vector>

namespace deskrl {

// Bounded priority buffer of completed items. Pop order is ascending
// (staleness, age) where staleness = current_version - max segment version
// and age is the push sequence number (FIFO among equals). When capacity is
// exceeded the oldest entry is dropped and counted. Safe for multiple
// producers and a single consumer.
template <class T>
class SamplePool {
 public:
  explicit SamplePool(std::size_t capacity) : capacity_(capacity) {}

  struct Entry {
    T item;
    int min_version = 0;
    int max_version = 0;
    std::uint64_t seq = 0;
  };

  void push(T item, int min_version, int max_version) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back(Entry{std::move(item), min_version, max_version, next_seq_++});
    if (entries_.size() > capacity_) {
      std::size_t oldest = 0;
      for (std::size_t i = 1; i < entries_.size(); ++i)
        if (entries_[i].seq < entries_[oldest].seq) oldest = i;
      entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(oldest));
      ++dropped_;
    }
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

  std::uint64_t dropped() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return dropped_;
  }

  // Entries generated entirely by the current version.
  std::size_t count_pure(int current_version) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t n = 0;
    for (const Entry& e : entries_)
      if (e.min_version == current_version && e.max_version == current_version) ++n;
    return n;
  }

  // Oldest entry generated entirely by the current version.
  bool pop_pure(int current_version, Entry& out) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t best = entries_.size();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const Entry& e = entries_[i];
      if (e.min_version != current_version || e.max_version != current_version) continue;
      if (best == entries_.size() || e.seq < entries_[best].seq) best = i;
    }
    if (best == entries_.size()) return false;
    out = std::move(entries_[best]);
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(best));
    return true;
  }

  // Best entry by (staleness, age).
  bool pop_best(int current_version, Entry& out) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (entries_.empty()) return false;
    std::size_t best = 0;
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      const auto key = [current_version](const Entry& e) {
        return std::pair<int, std::uint64_t>(current_version - e.max_version, e.seq);
      };
      if (key(entries_[i]) < key(entries_[best])) best = i;
    }
    out = std::move(entries_[best]);
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(best));
    return true;
  }

  // (staleness, seq) keys in current order; tests sort this to check pops.
  std::vector<std::pair<int, std::uint64_t>> keys(int current_version) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::pair<int, std::uint64_t>> out;
    out.reserve(entries_.size());
    for (const Entry& e : entries_)
      out.emplace_back(current_version - e.max_version, e.seq);
    return out;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dropped_ = 0;
};

}  // namespace deskrl
