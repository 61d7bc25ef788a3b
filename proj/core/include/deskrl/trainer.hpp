#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "deskrl/batching.hpp"
#include "deskrl/config.hpp"
#include "deskrl/executor.hpp"

namespace deskrl {

// One record per optimizer step. Serialized as one JSON line; the stream is
// byte-identical across runs with the same config and seed.
struct StepMetrics {
  int step = 0;
  double ppo_loss = 0.0;
  double value_loss = 0.0;
  double nll_loss = 0.0;
  double total_loss = 0.0;
  std::size_t token_count = 0;
  double mean_response_len = 0.0;
  int max_response_len = 0;
  double mean_reward = 0.0;
  double retained_fraction = 0.0;
  int resample_rounds = 0;
  double balance = 0.0;
  std::map<std::string, double> pass_rate;  // per cell EMA
  std::map<std::string, double> weights;
  std::map<int, int> staleness_hist;

  std::string to_json_line() const;
};

// Reward assignment for one trajectory of a group; defaults to the verifier.
using RewardFn = std::function<double(const PuzzleInstance&, const Trajectory&)>;

class Trainer {
 public:
  explicit Trainer(RLConfig config);

  // Regresses the value head onto Monte-Carlo returns of rollouts from the
  // frozen initial policy. Policy parameters are asserted bit-identical.
  void value_pretrain(const RewardFn& reward_fn = {});

  // Samples prompts, rolls out, rewards, filters (resampling on an empty
  // filter result), and applies one optimizer update. Appends the metrics
  // record to metrics().
  void step(const RewardFn& reward_fn = {});

  // One optimizer update on externally supplied groups with rewards already
  // assigned. The building block of step(), exposed for oracle tests.
  StepMetrics step_on_groups(std::vector<PromptGroup> groups);

  // value_pretrain + total_steps RL steps.
  void run(const RewardFn& reward_fn = {});

  const Policy& policy() const { return policy_; }
  Policy& mutable_policy() { return policy_; }
  const RLConfig& config() const { return cfg_; }
  const DomainStats& stats() const { return stats_; }
  const std::vector<StepMetrics>& metrics() const { return metrics_; }
  int steps_run() const { return step_index_; }
  SnapshotStore& snapshots() { return store_; }

  void set_metrics_sink(std::function<void(const StepMetrics&)> sink) { sink_ = std::move(sink); }

 private:
  double assign_rewards(std::vector<PromptGroup>& groups, const RewardFn& reward_fn, int round);
  RewardFn default_reward() const;

  RLConfig cfg_;
  Policy policy_;
  SnapshotStore store_;
  RolloutExecutor executor_;
  DomainStats stats_;
  std::vector<StepMetrics> metrics_;
  std::function<void(const StepMetrics&)> sink_;
  int step_index_ = 0;
  std::vector<PromptGroup> last_round_groups_;  // for metrics
  std::vector<PromptGroup> all_round_groups_;   // for distribution updates
  int last_resample_rounds_ = 0;
};

struct EvalInstanceResult {
  std::uint64_t instance_seed = 0;
  int n = 0;
  int correct = 0;
  double avg_at_k = 0.0;
  double pass_at_k = 0.0;
};

struct EvalResult {
  int n_instances = 0;
  int n = 0;
  int k = 0;
  double mean_avg_at_k = 0.0;
  double mean_pass_at_k = 0.0;
  std::vector<EvalInstanceResult> per_instance;

  std::string to_json() const;
};

// Samples n responses per fresh instance and reports avg@k and pass@k.
// greedy = true decodes deterministically (all n outcomes coincide).
EvalResult evaluate(const Policy& policy, TaskId task, int difficulty, int n, int k,
                    std::uint64_t seed, int n_instances = 50, bool greedy = false);

struct TrainOutcome {
  int steps_run = 0;
  double wall_seconds = 0.0;
  Policy final_policy;
  std::vector<StepMetrics> metrics;
};

// Full training run; when out_dir is non-empty writes resolved_config.json,
// metrics.jsonl (flushed each step), checkpoint.bin and run_summary.json.
TrainOutcome run_training(const RLConfig& config, const std::string& out_dir);

}  // namespace deskrl
