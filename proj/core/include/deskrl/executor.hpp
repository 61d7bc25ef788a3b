#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "deskrl/policy.hpp"
#include "deskrl/pool.hpp"
#include "deskrl/sampler.hpp"

namespace deskrl {

// Append-only store of versioned policy snapshots. Versions start at 1 and
// increase by one per append; reads are safe concurrently with appends.
class SnapshotStore {
 public:
  int append(Policy policy) {
    std::lock_guard<std::mutex> lock(mutex_);
    snapshots_.push_back(std::make_shared<const Policy>(std::move(policy)));
    return static_cast<int>(snapshots_.size());
  }

  int latest_version() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<int>(snapshots_.size());
  }

  std::shared_ptr<const Policy> at(int version) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return snapshots_.at(static_cast<std::size_t>(version - 1));
  }

  std::shared_ptr<const Policy> latest() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return snapshots_.back();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<const Policy>> snapshots_;
};

struct ExecutorConfig {
  double alpha_onpolicy = 1.0;
  // Parked generations pause at this fraction of max_len; they finish under
  // the next snapshot, which is what creates multi-version trajectories.
  double park_fraction = 0.5;
  std::size_t pool_capacity = 64;  // completed groups

  void validate() const;
};

// Drives generation for the trainer with the same admission/parking rules as
// the scheduler simulation, at prompt-group granularity. With alpha = 1 every
// step is plain on-policy rollout; with alpha < 1, ceil(alpha * G) groups are
// generated fresh by the latest snapshot and the rest of the batch is drawn
// from the pool of generations continued across snapshot versions.
class RolloutExecutor {
 public:
  RolloutExecutor(ExecutorConfig cfg, std::uint64_t global_seed);

  // Returns exactly prompts.size() groups of k trajectories, rewards unset.
  std::vector<PromptGroup> step(const SnapshotStore& store,
                                std::span<const PuzzleInstance> prompts, int k);

  std::size_t parked_groups() const { return parked_.size(); }
  std::size_t pooled_groups() const { return pool_.size(); }
  std::uint64_t dropped_groups() const { return pool_.dropped(); }

 private:
  struct PendingGroup {
    PuzzleInstance prompt;
    std::vector<double> features;
    std::uint64_t mask = 0;
    std::vector<Trajectory> partials;
  };

  PendingGroup make_group(const PuzzleInstance& prompt, const Policy& policy, int k);
  // Advances every trajectory of the group by up to budget tokens; returns
  // true when all are complete.
  bool advance_group(PendingGroup& group, const Policy& policy, int version, int budget);
  PromptGroup seal(PendingGroup group) const;

  ExecutorConfig cfg_;
  std::uint64_t seed_;
  std::uint64_t group_serial_ = 0;
  std::deque<PendingGroup> parked_;
  SamplePool<PromptGroup> pool_;
};

}  // namespace deskrl
