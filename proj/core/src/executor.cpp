#include "deskrl/executor.hpp"

#include <algorithm>
#include <cmath>

#include "deskrl/common.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {

void ExecutorConfig::validate() const {
  if (alpha_onpolicy < 0.0 || alpha_onpolicy > 1.0)
    throw ConfigError("alpha_onpolicy must be in [0,1]");
  if (!(park_fraction > 0.0 && park_fraction <= 1.0))
    throw ConfigError("park_fraction must be in (0,1]");
  if (pool_capacity < 1) throw ConfigError("pool_capacity must be >= 1");
}

RolloutExecutor::RolloutExecutor(ExecutorConfig cfg, std::uint64_t global_seed)
    : cfg_(cfg), seed_(global_seed), pool_(cfg.pool_capacity) {
  cfg_.validate();
}

RolloutExecutor::PendingGroup RolloutExecutor::make_group(const PuzzleInstance& prompt,
                                                          const Policy& policy, int k) {
  PendingGroup group;
  group.prompt = prompt;
  group.features = prompt_features(group.prompt);
  group.mask = legal_token_mask(group.prompt);
  (void)policy;
  group.partials.resize(static_cast<std::size_t>(k));
  const std::uint64_t base = group_serial_++ * static_cast<std::uint64_t>(k);
  for (int j = 0; j < k; ++j) group.partials[static_cast<std::size_t>(j)].attempt = base + j;
  return group;
}

bool RolloutExecutor::advance_group(PendingGroup& group, const Policy& policy, int version,
                                    int budget) {
  const PuzzleInstance& instance = group.prompt;
  const PromptView view{group.features,
                        [&instance](std::span<const int> prefix, std::span<double> out) {
                          dynamic_features(instance, prefix, out);
                        },
                        group.mask, group.prompt.uid()};
  bool all_done = true;
  for (Trajectory& traj : group.partials)
    all_done &= advance_rollout(policy, version, view, traj, policy.cfg.max_len, seed_, budget);
  return all_done;
}

PromptGroup RolloutExecutor::seal(PendingGroup group) const {
  PromptGroup out;
  out.prompt = std::move(group.prompt);
  out.trajectories = std::move(group.partials);
  return out;
}

std::vector<PromptGroup> RolloutExecutor::step(const SnapshotStore& store,
                                               std::span<const PuzzleInstance> prompts, int k) {
  if (prompts.empty()) throw InvalidInput("RolloutExecutor::step: no prompts");
  if (k < 1) throw InvalidInput("RolloutExecutor::step: k must be >= 1");
  const std::shared_ptr<const Policy> policy = store.latest();
  const int version = store.latest_version();
  if (version < 1) throw InvalidInput("RolloutExecutor::step: empty snapshot store");
  const int max_len = policy->cfg.max_len;

  // Continue generations parked at earlier versions to completion.
  while (!parked_.empty()) {
    PendingGroup group = std::move(parked_.front());
    parked_.pop_front();
    advance_group(group, *policy, version, max_len);
    PromptGroup done = seal(std::move(group));
    int min_v = done.trajectories.front().min_version();
    int max_v = done.trajectories.front().max_version();
    for (const Trajectory& t : done.trajectories) {
      min_v = std::min(min_v, t.min_version());
      max_v = std::max(max_v, t.max_version());
    }
    pool_.push(std::move(done), min_v, max_v);
  }

  const int n_groups = static_cast<int>(prompts.size());
  const int fresh_quota = std::min(
      n_groups,
      static_cast<int>(std::ceil(cfg_.alpha_onpolicy * static_cast<double>(n_groups) - 1e-12)));

  std::vector<PromptGroup> batch;
  batch.reserve(static_cast<std::size_t>(n_groups));
  for (int i = 0; i < fresh_quota; ++i) {
    PendingGroup group = make_group(prompts[static_cast<std::size_t>(i)], *policy, k);
    advance_group(group, *policy, version, max_len);
    batch.push_back(seal(std::move(group)));
  }

  // The off-policy allotment: start the remaining prompts but park them at a
  // partial prefix; they complete under the next snapshot.
  const int park_budget =
      std::max(1, static_cast<int>(static_cast<double>(max_len) * cfg_.park_fraction));
  for (int i = fresh_quota; i < n_groups; ++i) {
    PendingGroup group = make_group(prompts[static_cast<std::size_t>(i)], *policy, k);
    if (advance_group(group, *policy, version, park_budget)) {
      PromptGroup done = seal(std::move(group));
      pool_.push(std::move(done), version, version);
    } else {
      parked_.push_back(std::move(group));
    }
  }

  // Fill the rest of the batch from the pool, freshest first. While the
  // pipeline is cold (early steps) generate replacement groups on the latest
  // snapshot instead of cannibalizing the freshly parked work.
  for (int i = fresh_quota; i < n_groups; ++i) {
    SamplePool<PromptGroup>::Entry entry;
    if (pool_.pop_best(version, entry)) {
      batch.push_back(std::move(entry.item));
      continue;
    }
    PendingGroup group = make_group(prompts[static_cast<std::size_t>(i)], *policy, k);
    advance_group(group, *policy, version, max_len);
    batch.push_back(seal(std::move(group)));
  }
  return batch;
}

}  // namespace deskrl
