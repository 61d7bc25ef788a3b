#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace deskrl {

// Decoupled PPO clip bounds: [1 - eps_low, 1 + eps_high].
struct ClipParams {
  double eps_low = 0.2;
  double eps_high = 0.3;

  void validate() const;
};

struct LossBreakdown {
  double ppo_loss = 0.0;
  double value_loss = 0.0;
  double nll_loss = 0.0;
  double total = 0.0;
  std::size_t token_count = 0;
};

// Per-sequence view of the training-time tensors for one trajectory.
// cur_logprob is recomputed under the parameters being optimized;
// beh_logprob is the stamp recorded by the snapshot that generated the token.
struct SeqView {
  std::span<const double> cur_logprob;
  std::span<const double> beh_logprob;
  std::span<const double> advantage;
  std::span<const double> value_pred;
  std::span<const double> value_target;
  double reward = 0.0;
};

// Partial derivatives of a scalar loss w.r.t. the per-token inputs, shaped
// like the batch. These chain through the policy's parameter gradients.
struct TokenGrads {
  std::vector<std::vector<double>> d_logprob;
  std::vector<std::vector<double>> d_value;

  void resize_like(std::span<const SeqView> batch);
};

// Per-token surrogate of the decoupled-clip objective:
// min(ratio * advantage, clamp(ratio, 1-eps_low, 1+eps_high) * advantage).
// This is the quantity to maximize; losses negate it.
double clip_higher_term(double ratio, double advantage, const ClipParams& clip);

// Negated mean of clip_higher_term over every token of every trajectory in
// the batch (token-level aggregation: one normalizer, the batch token count).
// If grads is non-null, accumulates scale * dLoss/d(cur_logprob) into it.
double token_level_ppo_loss(std::span<const SeqView> batch, const ClipParams& clip,
                            TokenGrads* grads = nullptr, double scale = 1.0);

// Mean negative log-likelihood over all tokens of trajectories with
// reward > reward_threshold; 0 when no trajectory qualifies.
double positive_example_nll(std::span<const SeqView> batch, double reward_threshold,
                            TokenGrads* grads = nullptr, double scale = 1.0);

// Mean squared error between value predictions and targets over all tokens.
double value_mse(std::span<const SeqView> batch, TokenGrads* grads = nullptr, double scale = 1.0);

// total = ppo + mu * nll + value_coeff * value_mse. Gradient contributions,
// when requested, are accumulated already scaled by mu / value_coeff.
LossBreakdown combined_loss(std::span<const SeqView> batch, const ClipParams& clip, double mu,
                            double value_coeff, double positive_reward_threshold = 0.5,
                            TokenGrads* grads = nullptr);

}  // namespace deskrl
