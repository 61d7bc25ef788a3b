#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deskrl/objective.hpp"
#include "deskrl/tokens.hpp"
#include "deskrl/trajectory.hpp"

namespace deskrl {

// Shape of the tiny autoregressive policy and its value head. Both heads are
// single-hidden-layer tanh networks over the same context encoding but with
// disjoint parameters, so value updates can never touch the policy.
struct PolicyConfig {
  int alphabet = kAlphabetSize;  // <= 64
  int hidden = 32;               // <= 64
  int value_hidden = 16;         // <= 64
  int window = 8;                // recent tokens encoded positionally
  int prompt_dims = 64;          // static prompt feature block
  int dynamic_dims = 0;          // per-step prompt-state block
  int max_len = 32;

  int context_dims() const {
    return prompt_dims + dynamic_dims + window * alphabet + 2 * alphabet + 1;
  }
  void validate() const;
  std::uint64_t shape_hash() const;
};

// Sparse feature vector; index/value pairs into a dense space of size dim.
struct SparseVec {
  int dim = 0;
  std::vector<std::pair<int, double>> entries;
};

// Writes per-step prompt-state features (dynamic_dims entries) for a prefix.
using DynamicFeatureFn = std::function<void(std::span<const int>, std::span<double>)>;

// Deterministic encoding of (prompt, generated prefix):
//   [static prompt block | per-step prompt-state block |
//    token-at-slot one-hots for the last W tokens | window bag | prefix bag |
//    progress scalar]
class ContextEncoder {
 public:
  explicit ContextEncoder(const PolicyConfig& cfg)
      : cfg_(cfg), dynamic_scratch_(static_cast<std::size_t>(cfg.dynamic_dims)) {}

  SparseVec encode(std::span<const double> prompt_features, const DynamicFeatureFn& dynamic_fn,
                   std::span<const int> prefix);

 private:
  PolicyConfig cfg_;
  std::vector<double> dynamic_scratch_;
};

// What the policy needs to know about an instance. Non-owning; features and
// the dynamic feature source must outlive the view.
struct PromptView {
  std::span<const double> features;  // prompt_dims entries
  DynamicFeatureFn dynamic_features; // may be empty when dynamic_dims == 0
  std::uint64_t legal_mask = ~0ULL;
  std::uint64_t uid = 0;
};

struct Policy {
  PolicyConfig cfg;
  std::vector<double> theta;  // flat parameters, layout per Offsets

  struct Offsets {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;      // policy trunk + head
    std::size_t v1 = 0, vb1 = 0, v2 = 0, vb2 = 0;    // value trunk + head
    std::size_t total = 0;
  };
  Offsets off;

  static Policy init(const PolicyConfig& cfg, std::uint64_t seed);

  std::size_t param_count() const { return off.total; }
  // Value parameters occupy a contiguous tail slice.
  std::pair<std::size_t, std::size_t> value_param_range() const { return {off.v1, off.total}; }
};

// Raw next-token scores; softmax over the legal set is the sampling
// distribution. Throws on a context whose dimension mismatches the config.
std::vector<double> logits(const Policy& policy, const SparseVec& ctx);

// Log-probabilities over the alphabet with illegal tokens at -infinity.
std::vector<double> masked_log_softmax(std::span<const double> raw_logits, std::uint64_t mask);

double logprob_at(const Policy& policy, const SparseVec& ctx, int token, std::uint64_t mask);

double value_predict(const Policy& policy, const SparseVec& ctx);

// grad += weight * d log pi(token | ctx) / d theta  (flat layout)
void accumulate_logprob_grad(const Policy& policy, const SparseVec& ctx, int token,
                             std::uint64_t mask, double weight, std::span<double> grad);

// grad += weight * d V(ctx) / d theta
void accumulate_value_grad(const Policy& policy, const SparseVec& ctx, double weight,
                           std::span<double> grad);

// Autoregressive sampling until <end> or max_len tokens. Token t of attempt a
// for prompt u is drawn from counter position t of the stream keyed
// (global_seed, u, a), so resumed generations reproduce exactly.
Trajectory rollout(const Policy& policy, int snapshot_version, const PromptView& prompt,
                   int max_len, std::uint64_t global_seed, std::uint64_t attempt);

// Appends up to token_budget tokens to a partial trajectory under the given
// snapshot. Returns true when the trajectory is complete (<end> or max_len).
bool advance_rollout(const Policy& policy, int snapshot_version, const PromptView& prompt,
                     Trajectory& traj, int max_len, std::uint64_t global_seed, int token_budget);

// Greedy decoding (argmax over legal tokens), for evaluation.
Trajectory greedy_rollout(const Policy& policy, int snapshot_version, const PromptView& prompt,
                          int max_len);

struct LogprobGradResult {
  std::vector<double> logprobs;  // per token, under the given policy
  std::vector<double> grad;      // d(sum logprobs)/d theta
};

LogprobGradResult logprob_grad(const Policy& policy, const PromptView& prompt,
                               const Trajectory& traj);

// Per-token tensors the trainer needs for one sequence.
struct SeqTensors {
  std::vector<SparseVec> contexts;  // positions 0..len-1
  SparseVec end_context;            // position len (value bootstrap)
  std::vector<double> logprobs;
  std::vector<double> values;
};

SeqTensors evaluate_sequence(const Policy& policy, const PromptView& prompt,
                             std::span<const int> tokens);

// --- finite-difference oracle ----------------------------------------------

// One sequence with frozen advantages / value targets; the combined loss is
// a pure function of theta given these.
struct GradCheckItem {
  PromptView prompt;
  Trajectory traj;  // advantages and value_targets populated
};

struct FiniteDiffReport {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_coordinate = 0;
};

double batch_combined_loss(const Policy& policy, std::span<const GradCheckItem> batch,
                           const ClipParams& clip, double mu, double value_coeff);

std::vector<double> batch_combined_loss_grad(const Policy& policy,
                                             std::span<const GradCheckItem> batch,
                                             const ClipParams& clip, double mu,
                                             double value_coeff, double* loss_out = nullptr);

// Central differences on a random subset of at least min_coords coordinates.
FiniteDiffReport finite_diff_check(const Policy& policy, std::span<const GradCheckItem> batch,
                                   const ClipParams& clip, double mu, double value_coeff,
                                   double step, std::size_t min_coords, std::uint64_t seed);

// --- checkpoint format ------------------------------------------------------
// Little-endian binary: magic "DSKRLCK1", u32 format version, u32 alphabet,
// u32 hidden, u32 value_hidden, u32 window, u32 prompt_dims, u32 dynamic_dims,
// u32 max_len, u64 config hash, u64 parameter count, then parameters in flat
// order. Round-trips bit exactly.

void save_checkpoint(const Policy& policy, const std::string& path, std::uint64_t config_hash);
Policy load_checkpoint(const std::string& path, std::uint64_t* config_hash_out = nullptr);

}  // namespace deskrl
