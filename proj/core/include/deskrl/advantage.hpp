#pragma once

#include <optional>
#include <span>
#include <vector>

namespace deskrl {

// Estimation parameters. Value targets always use lambda_value; the policy
// lambda is either adapted to the trajectory length or fixed.
struct GaeParams {
  double gamma = 1.0;
  double lambda_value = 1.0;
  double alpha_gae = 0.05;
  bool length_adaptive = true;
  double lambda_policy_fixed = 0.95;

  void validate() const;
};

struct AdvantageResult {
  std::vector<double> advantages;
  std::vector<double> value_targets;
};

// returns[t] = rewards[t] + gamma * returns[t+1], zero beyond the end.
std::vector<double> monte_carlo_returns(std::span<const double> rewards, double gamma);

// delta_t = r_t + gamma * V_{t+1} - V_t with V past the end = bootstrap_value;
// A_t = delta_t + gamma * lambda * A_{t+1}.
std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values,
                                   double bootstrap_value, double gamma, double lambda);

// max(0, 1 - 1/(alpha * length)); always < 1.
double length_adaptive_lambda(std::size_t length, double alpha_gae);

// Advantages with the policy lambda, targets with lambda_value
// (targets[t] = A_t^{lambda_value} + V_t).
AdvantageResult decoupled_estimates(std::span<const double> rewards,
                                    std::span<const double> values,
                                    double bootstrap_value, const GaeParams& params);

}  // namespace deskrl
