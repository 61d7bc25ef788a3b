#include "deskrl/objective.hpp"

#include <algorithm>
#include <cmath>

#include "deskrl/common.hpp"

namespace deskrl {

void ClipParams::validate() const {
  if (!(eps_low > 0.0 && eps_low < 1.0)) throw InvalidInput("eps_low must be in (0,1)");
  if (!(eps_high > 0.0)) throw InvalidInput("eps_high must be > 0");
}

void TokenGrads::resize_like(std::span<const SeqView> batch) {
  d_logprob.assign(batch.size(), {});
  d_value.assign(batch.size(), {});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    d_logprob[i].assign(batch[i].cur_logprob.size(), 0.0);
    d_value[i].assign(batch[i].value_pred.size(), 0.0);
  }
}

double clip_higher_term(double ratio, double advantage, const ClipParams& clip) {
  if (!std::isfinite(ratio) || !std::isfinite(advantage))
    throw InvalidInput("clip_higher_term: non-finite input");
  if (!(ratio > 0.0)) throw InvalidInput("clip_higher_term: ratio must be > 0");
  const double clamped = std::clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high);
  return std::min(ratio * advantage, clamped * advantage);
}

static std::size_t batch_token_count(std::span<const SeqView> batch) {
  std::size_t n = 0;
  for (const SeqView& s : batch) n += s.cur_logprob.size();
  return n;
}

double token_level_ppo_loss(std::span<const SeqView> batch, const ClipParams& clip,
                            TokenGrads* grads, double scale) {
  clip.validate();
  const std::size_t n_tokens = batch_token_count(batch);
  if (n_tokens == 0) throw InvalidInput("token_level_ppo_loss: zero tokens");

  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SeqView& s = batch[i];
    for (std::size_t t = 0; t < s.cur_logprob.size(); ++t) {
      const double ratio = std::exp(s.cur_logprob[t] - s.beh_logprob[t]);
      const double adv = s.advantage[t];
      const double unclipped = ratio * adv;
      const double clamped = std::clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high);
      const double clipped = clamped * adv;
      sum += std::min(unclipped, clipped);
      if (grads != nullptr && unclipped <= clipped) {
        // d/d(logp) of ratio*adv; the clipped branch is flat in logp.
        grads->d_logprob[i][t] += scale * (-unclipped / static_cast<double>(n_tokens));
      }
    }
  }
  return -sum / static_cast<double>(n_tokens);
}

double positive_example_nll(std::span<const SeqView> batch, double reward_threshold,
                            TokenGrads* grads, double scale) {
  std::size_t n_pos = 0;
  for (const SeqView& s : batch)
    if (s.reward > reward_threshold) n_pos += s.cur_logprob.size();
  if (n_pos == 0) return 0.0;

  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SeqView& s = batch[i];
    if (!(s.reward > reward_threshold)) continue;
    for (std::size_t t = 0; t < s.cur_logprob.size(); ++t) {
      sum -= s.cur_logprob[t];
      if (grads != nullptr)
        grads->d_logprob[i][t] += scale * (-1.0 / static_cast<double>(n_pos));
    }
  }
  return sum / static_cast<double>(n_pos);
}

double value_mse(std::span<const SeqView> batch, TokenGrads* grads, double scale) {
  const std::size_t n_tokens = batch_token_count(batch);
  if (n_tokens == 0) throw InvalidInput("value_mse: zero tokens");
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SeqView& s = batch[i];
    for (std::size_t t = 0; t < s.value_pred.size(); ++t) {
      const double err = s.value_pred[t] - s.value_target[t];
      sum += err * err;
      if (grads != nullptr)
        grads->d_value[i][t] += scale * (2.0 * err / static_cast<double>(n_tokens));
    }
  }
  return sum / static_cast<double>(n_tokens);
}

LossBreakdown combined_loss(std::span<const SeqView> batch, const ClipParams& clip, double mu,
                            double value_coeff, double positive_reward_threshold,
                            TokenGrads* grads) {
  if (mu < 0.0 || value_coeff < 0.0)
    throw InvalidInput("combined_loss: mu and value_coeff must be >= 0");
  if (grads != nullptr) grads->resize_like(batch);

  LossBreakdown out;
  out.token_count = batch_token_count(batch);
  out.ppo_loss = token_level_ppo_loss(batch, clip, grads, 1.0);
  out.nll_loss = positive_example_nll(batch, positive_reward_threshold, grads, mu);
  out.value_loss = value_mse(batch, grads, value_coeff);
  out.total = out.ppo_loss + mu * out.nll_loss + value_coeff * out.value_loss;
  if (!std::isfinite(out.total)) throw NumericalError("combined_loss: non-finite total loss");
  return out;
}

}  // namespace deskrl
