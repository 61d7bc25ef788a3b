#include "deskrl/batching.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>

#include "deskrl/common.hpp"

namespace deskrl {
namespace {

struct KkBin {
  long long load = 0;
  std::vector<int> members;
};

struct KkTuple {
  std::vector<KkBin> bins;  // sorted by load descending
  long long spread = 0;
  std::uint64_t seq = 0;
};

struct KkOrder {
  bool operator()(const KkTuple& a, const KkTuple& b) const {
    if (a.spread != b.spread) return a.spread < b.spread;  // largest spread on top
    return a.seq > b.seq;
  }
};

void sort_bins(KkTuple& t) {
  std::stable_sort(t.bins.begin(), t.bins.end(),
                   [](const KkBin& a, const KkBin& b) { return a.load > b.load; });
  t.spread = t.bins.front().load - t.bins.back().load;
}

// Multiway Karmarkar-Karp differencing: repeatedly merge the two tuples with
// the largest spreads, pairing heavy bins of one with light bins of the other.
MicroBatchPlan kk_heuristic(std::span<const long long> lengths, int m) {
  std::priority_queue<KkTuple, std::vector<KkTuple>, KkOrder> heap;
  std::uint64_t seq = 0;
  for (int i = 0; i < static_cast<int>(lengths.size()); ++i) {
    KkTuple t;
    t.bins.resize(static_cast<std::size_t>(m));
    t.bins[0].load = lengths[i];
    t.bins[0].members = {i};
    t.spread = lengths[i];
    t.seq = seq++;
    heap.push(std::move(t));
  }
  while (heap.size() > 1) {
    KkTuple a = heap.top();
    heap.pop();
    KkTuple b = heap.top();
    heap.pop();
    KkTuple merged;
    merged.bins.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      KkBin& bin = merged.bins[static_cast<std::size_t>(i)];
      const KkBin& heavy = a.bins[static_cast<std::size_t>(i)];
      const KkBin& light = b.bins[static_cast<std::size_t>(m - 1 - i)];
      bin.load = heavy.load + light.load;
      bin.members = heavy.members;
      bin.members.insert(bin.members.end(), light.members.begin(), light.members.end());
    }
    sort_bins(merged);
    merged.seq = seq++;
    heap.push(std::move(merged));
  }

  const KkTuple& final_tuple = heap.top();
  MicroBatchPlan plan;
  plan.m = m;
  plan.assignment.assign(lengths.size(), 0);
  plan.loads.assign(static_cast<std::size_t>(m), 0);
  for (int b = 0; b < m; ++b) {
    plan.loads[static_cast<std::size_t>(b)] = final_tuple.bins[static_cast<std::size_t>(b)].load;
    for (int idx : final_tuple.bins[static_cast<std::size_t>(b)].members)
      plan.assignment[static_cast<std::size_t>(idx)] = b;
  }
  return plan;
}

struct ExactSolver {
  std::span<const long long> len;  // descending
  int m = 0;
  long long lower_bound = 0;
  long long best = 0;  // exclusive bound: looking for max load < best
  std::vector<long long> loads;
  std::vector<int> assign;
  std::vector<int> best_assign;

  void dfs(std::size_t i, long long cur_max) {
    if (std::max(cur_max, lower_bound) >= best) return;
    if (i == len.size()) {
      best = cur_max;
      best_assign = assign;
      return;
    }
    bool tried_empty = false;
    for (int b = 0; b < m; ++b) {
      const long long load = loads[static_cast<std::size_t>(b)];
      if (load == 0) {
        if (tried_empty) break;  // empty bins are interchangeable
        tried_empty = true;
      } else {
        bool duplicate = false;
        for (int b2 = 0; b2 < b; ++b2)
          duplicate |= (loads[static_cast<std::size_t>(b2)] == load);
        if (duplicate) continue;
      }
      const long long next = load + len[i];
      if (next >= best) continue;
      loads[static_cast<std::size_t>(b)] = next;
      assign[i] = b;
      dfs(i + 1, std::max(cur_max, next));
      loads[static_cast<std::size_t>(b)] = load;
      if (best == lower_bound) return;  // cannot improve further
    }
  }
};

}  // namespace

MicroBatchPlan karp_partition(std::span<const long long> lengths, int m) {
  if (m < 1) throw InvalidInput("karp_partition: m must be >= 1");
  if (lengths.empty()) throw InvalidInput("karp_partition: lengths must be non-empty");
  for (long long l : lengths)
    if (l <= 0) throw InvalidInput("karp_partition: lengths must be positive");

  if (lengths.size() > 20) return kk_heuristic(lengths, m);

  // Exact mode: branch and bound over items in decreasing size, warm-started
  // by the differencing heuristic.
  std::vector<int> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&lengths](int a, int b) { return lengths[static_cast<std::size_t>(a)] >
                                                     lengths[static_cast<std::size_t>(b)]; });
  std::vector<long long> sorted(lengths.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    sorted[i] = lengths[static_cast<std::size_t>(order[i])];

  const long long total = std::accumulate(sorted.begin(), sorted.end(), 0LL);
  const long long lb = std::max((total + m - 1) / m, sorted.front());

  const MicroBatchPlan warm = kk_heuristic(lengths, m);
  const long long warm_max = *std::max_element(warm.loads.begin(), warm.loads.end());

  ExactSolver solver;
  solver.len = sorted;
  solver.m = m;
  solver.lower_bound = lb;
  solver.best = warm_max + 1;
  solver.loads.assign(static_cast<std::size_t>(m), 0);
  solver.assign.assign(sorted.size(), 0);
  solver.dfs(0, 0);

  MicroBatchPlan plan;
  plan.m = m;
  plan.assignment.assign(lengths.size(), 0);
  plan.loads.assign(static_cast<std::size_t>(m), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int bin = solver.best_assign[i];
    plan.assignment[static_cast<std::size_t>(order[i])] = bin;
    plan.loads[static_cast<std::size_t>(bin)] += sorted[i];
  }
  return plan;
}

double balance_metric(const MicroBatchPlan& plan) {
  long long total = 0, max_load = 0;
  for (long long l : plan.loads) {
    total += l;
    max_load = std::max(max_load, l);
  }
  if (total <= 0) throw InvalidInput("balance_metric: total load must be > 0");
  const double mean = static_cast<double>(total) / static_cast<double>(plan.m);
  return static_cast<double>(max_load) / mean;
}

}  // namespace deskrl
