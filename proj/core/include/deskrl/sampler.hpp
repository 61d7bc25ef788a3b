#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "deskrl/envs.hpp"
#include "deskrl/trajectory.hpp"

namespace deskrl {

// One prompt with its k sampled trajectories.
struct PromptGroup {
  PuzzleInstance prompt;
  std::vector<Trajectory> trajectories;
  double accuracy = 0.0;  // fraction with reward > 0.5

  void recompute_accuracy();
};

// Retains exactly the groups with 0 < accuracy < 1, preserving order.
std::vector<PromptGroup> dynamic_filter(std::vector<PromptGroup> groups);

struct CellKey {
  TaskId task = TaskId::twentyfour;
  int difficulty = 1;

  auto operator<=>(const CellKey&) const = default;
};

struct CellStats {
  double ema = 0.5;  // pass-rate estimate; 0.5 prior maximizes initial weight
  std::uint64_t sample_count = 0;
  double weight = 0.0;
};

// Per-cell pass-rate tracking and the adaptive sampling distribution:
// weight proportional to ema*(1-ema) + floor, renormalized.
struct DomainStats {
  std::map<CellKey, CellStats> cells;
  double beta = 0.9;           // EMA decay
  double weight_floor = 0.01;  // epsilon

  static DomainStats make(std::span<const CellKey> cell_keys, double beta = 0.9,
                          double weight_floor = 0.01);

  void renormalize();
};

DomainStats update_distribution(DomainStats stats, std::span<const PromptGroup> new_groups);

// Draws n cells i.i.d. from the weight distribution, then generates a fresh
// instance per draw. Deterministic per seed.
std::vector<PuzzleInstance> sample_prompts(const DomainStats& stats, int n, std::uint64_t seed);

// Unbiased estimator 1 - C(n-c, k)/C(n, k).
double pass_at_k(int n_samples, int n_correct, int k);
double pass_at_k(const std::vector<bool>& outcomes, int k);

double avg_at_k(const std::vector<bool>& outcomes);

}  // namespace deskrl
