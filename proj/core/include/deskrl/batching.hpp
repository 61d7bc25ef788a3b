#pragma once

#include <span>
#include <vector>

namespace deskrl {

// Assignment of sequences to micro-batches with balanced total token counts.
struct MicroBatchPlan {
  int m = 0;
  std::vector<int> assignment;    // sequence index -> micro-batch index
  std::vector<long long> loads;   // per micro-batch token totals
};

// Minimizes the maximum micro-batch load. Exact (branch and bound) for
// n <= 20 sequences, multiway Karmarkar-Karp differencing beyond that.
// Ties break toward the lowest micro-batch index; m > n leaves some
// micro-batches empty.
MicroBatchPlan karp_partition(std::span<const long long> lengths, int m);

// max load / mean load; >= 1, 1 at a perfect split.
double balance_metric(const MicroBatchPlan& plan);

}  // namespace deskrl
