#include "deskrl/sampler.hpp"

#include "deskrl/common.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {

void PromptGroup::recompute_accuracy() {
  if (trajectories.empty()) {
    accuracy = 0.0;
    return;
  }
  int correct = 0;
  for (const Trajectory& t : trajectories)
    if (t.reward > 0.5) ++correct;
  accuracy = static_cast<double>(correct) / static_cast<double>(trajectories.size());
}

std::vector<PromptGroup> dynamic_filter(std::vector<PromptGroup> groups) {
  std::vector<PromptGroup> retained;
  retained.reserve(groups.size());
  for (PromptGroup& g : groups)
    if (g.accuracy > 0.0 && g.accuracy < 1.0) retained.push_back(std::move(g));
  return retained;
}

DomainStats DomainStats::make(std::span<const CellKey> cell_keys, double beta,
                              double weight_floor) {
  if (cell_keys.empty()) throw InvalidInput("DomainStats: at least one cell required");
  if (beta < 0.0 || beta >= 1.0) throw InvalidInput("DomainStats: beta must be in [0,1)");
  if (!(weight_floor > 0.0)) throw InvalidInput("DomainStats: weight floor must be > 0");
  DomainStats stats;
  stats.beta = beta;
  stats.weight_floor = weight_floor;
  for (const CellKey& key : cell_keys) stats.cells[key] = CellStats{};
  stats.renormalize();
  return stats;
}

void DomainStats::renormalize() {
  double total = 0.0;
  for (auto& [key, cell] : cells) {
    cell.weight = cell.ema * (1.0 - cell.ema) + weight_floor;
    total += cell.weight;
  }
  for (auto& [key, cell] : cells) cell.weight /= total;
}

DomainStats update_distribution(DomainStats stats, std::span<const PromptGroup> new_groups) {
  for (const PromptGroup& g : new_groups) {
    const CellKey key{g.prompt.task, g.prompt.difficulty};
    auto it = stats.cells.find(key);
    if (it == stats.cells.end()) it = stats.cells.emplace(key, CellStats{}).first;
    CellStats& cell = it->second;
    cell.ema = stats.beta * cell.ema + (1.0 - stats.beta) * g.accuracy;
    cell.sample_count += g.trajectories.size();
  }
  stats.renormalize();
  return stats;
}

std::vector<PuzzleInstance> sample_prompts(const DomainStats& stats, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("sample_prompts: n must be >= 1");
  if (stats.cells.empty()) throw InvalidInput("sample_prompts: no cells");
  CounterRng rng = CounterRng::keyed({seed, 0x70726f6d707473ULL});
  std::vector<PuzzleInstance> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_unit();
    double acc = 0.0;
    const CellKey* picked = nullptr;
    for (const auto& [key, cell] : stats.cells) {
      acc += cell.weight;
      picked = &key;
      if (u < acc) break;
    }
    const std::uint64_t instance_seed = hash_mix(seed, 0xA5A5A5A5ULL + static_cast<std::uint64_t>(i));
    out.push_back(generate_instance(picked->task, picked->difficulty, instance_seed));
  }
  return out;
}

double pass_at_k(int n_samples, int n_correct, int k) {
  if (k < 1 || k > n_samples) throw InvalidInput("pass_at_k: require 1 <= k <= n");
  if (n_correct < 0 || n_correct > n_samples) throw InvalidInput("pass_at_k: bad success count");
  // 1 - C(n-c,k)/C(n,k) as a stable running product.
  double ratio = 1.0;
  for (int i = 0; i < k; ++i) {
    const double numer = static_cast<double>(n_samples - n_correct - i);
    if (numer <= 0.0) return 1.0;
    ratio *= numer / static_cast<double>(n_samples - i);
  }
  return 1.0 - ratio;
}

double pass_at_k(const std::vector<bool>& outcomes, int k) {
  int correct = 0;
  for (bool b : outcomes) correct += b ? 1 : 0;
  return pass_at_k(static_cast<int>(outcomes.size()), correct, k);
}

double avg_at_k(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) throw InvalidInput("avg_at_k: empty outcomes");
  int correct = 0;
  for (bool b : outcomes) correct += b ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

}  // namespace deskrl
