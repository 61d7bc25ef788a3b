#include "deskrl/advantage.hpp"

#include "deskrl/common.hpp"

namespace deskrl {

void GaeParams::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw InvalidInput("gamma must be in [0,1]");
  if (lambda_value < 0.0 || lambda_value > 1.0) throw InvalidInput("lambda_value must be in [0,1]");
  if (lambda_policy_fixed < 0.0 || lambda_policy_fixed > 1.0)
    throw InvalidInput("lambda_policy_fixed must be in [0,1]");
  if (!(alpha_gae > 0.0)) throw InvalidInput("alpha_gae must be > 0");
}

std::vector<double> monte_carlo_returns(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw InvalidInput("monte_carlo_returns: empty trajectory");
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    returns[i] = acc;
  }
  return returns;
}

std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values,
                                   double bootstrap_value, double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw InvalidInput("gae_advantages: rewards/values length mismatch");
  if (rewards.empty()) throw InvalidInput("gae_advantages: empty trajectory");
  const std::size_t n = rewards.size();
  std::vector<double> adv(n);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    next_adv = delta + gamma * lambda * next_adv;
    adv[i] = next_adv;
    next_value = values[i];
  }
  return adv;
}

double length_adaptive_lambda(std::size_t length, double alpha_gae) {
  if (length == 0) throw InvalidInput("length_adaptive_lambda: length must be >= 1");
  if (!(alpha_gae > 0.0)) throw InvalidInput("length_adaptive_lambda: alpha_gae must be > 0");
  const double raw = 1.0 - 1.0 / (alpha_gae * static_cast<double>(length));
  return raw < 0.0 ? 0.0 : raw;
}

AdvantageResult decoupled_estimates(std::span<const double> rewards,
                                    std::span<const double> values,
                                    double bootstrap_value, const GaeParams& params) {
  params.validate();
  const double lambda_policy = params.length_adaptive
                                   ? length_adaptive_lambda(rewards.size(), params.alpha_gae)
                                   : params.lambda_policy_fixed;
  AdvantageResult out;
  out.advantages = gae_advantages(rewards, values, bootstrap_value, params.gamma, lambda_policy);
  std::vector<double> value_adv =
      gae_advantages(rewards, values, bootstrap_value, params.gamma, params.lambda_value);
  out.value_targets.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.value_targets[i] = value_adv[i] + values[i];
  return out;
}

}  // namespace deskrl
