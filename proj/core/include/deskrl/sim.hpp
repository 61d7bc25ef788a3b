#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace deskrl {

// Streaming-rollout scheduler parameters. Time advances in ticks; every unit
// produces tokens_per_unit_per_tick tokens per tick (standalone units scaled
// by fp8_speedup). Response lengths come from a capped lognormal, or from
// fixed_lengths cycled in admission order when provided.
struct SrsConfig {
  double alpha_onpolicy = 1.0;
  int batch_size = 8;
  int n_main_units = 0;  // 0 -> batch_size
  int n_standalone_units = 0;
  double tokens_per_unit_per_tick = 1.0;
  double fp8_speedup = 1.0;  // throughput multiplier for standalone units
  double lognormal_mu = 5.0;
  double lognormal_sigma = 1.0;
  long long max_length = 2000;
  std::vector<long long> fixed_lengths;
  std::size_t pool_capacity = 0;  // 0 -> 4 * batch_size

  int main_units() const { return n_main_units > 0 ? n_main_units : batch_size; }
  std::size_t capacity() const {
    return pool_capacity > 0 ? pool_capacity : static_cast<std::size_t>(4 * batch_size);
  }
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  long long fired_at = 0;
  long long duration = 0;
  int fresh_used = 0;
  int pooled_used = 0;
  double main_idle_fraction = 0.0;
  std::map<int, int> staleness_hist;  // current_version - oldest segment version
  long long tokens_consumed = 0;
};

struct SimCounters {
  long long admitted = 0;
  long long completed = 0;
  long long consumed = 0;
  long long dropped = 0;
  long long park_events = 0;
  long long in_pool = 0;     // completed, never consumed
  long long in_flight = 0;   // admitted, incomplete at shutdown (running/parked/pending)
};

struct SimResult {
  std::vector<IterationRecord> iterations;
  double mean_iteration_time = 0.0;
  double mean_idle_fraction = 0.0;
  double tokens_per_tick = 0.0;
  bool warmup_excluded = false;
  IterationRecord warmup;  // the excluded pool-priming iteration, when any
  SimCounters counters;
  std::vector<std::vector<int>> consumed_segments;  // per consumed task
  std::vector<std::string> event_log;
};

// Synchronous hybrid-engine baseline: batch_size units, one response each;
// the iteration ends when the longest response finishes and every unit that
// finished earlier idles until then.
SimResult simulate_sync(const SrsConfig& config, int n_iterations, std::uint64_t seed);

// Streaming rollout: a training step fires once ceil(alpha * batch_size)
// completions generated purely by the current snapshot exist and the pool can
// supply the rest. Unfinished main-unit tasks park to standalone units at
// each version bump and continue from their partial prefix under the new
// snapshot; idle standalone units generate ahead into the pool.
SimResult simulate_streaming(const SrsConfig& config, int n_iterations, std::uint64_t seed,
                             bool collect_log = false);

struct CompareResult {
  SimResult sync;
  SimResult streaming;
  double iteration_speedup = 0.0;       // sync mean iteration time / streaming mean
  double token_throughput_ratio = 0.0;  // streaming tokens/tick / sync tokens/tick
};

// Runs both schedulers on the identical admission-indexed length sequence.
CompareResult compare_schedulers(const SrsConfig& config, int n_iterations, std::uint64_t seed);

}  // namespace deskrl
