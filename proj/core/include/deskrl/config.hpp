#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deskrl/advantage.hpp"
#include "deskrl/objective.hpp"
#include "deskrl/policy.hpp"
#include "deskrl/sampler.hpp"

namespace deskrl {

// Every run hyperparameter in one validated record. Loaded from a JSON file;
// unknown keys are rejected, all ranges checked at load.
struct RLConfig {
  std::uint64_t seed = 17;
  std::vector<CellKey> cells = {{TaskId::maze, 1}};

  // batch shape
  int group_size = 8;          // k rollouts per prompt
  int prompts_per_batch = 32;  // prompt groups per step
  int micro_batches = 4;
  int max_response_len = 32;

  // optimization
  double learning_rate = 0.2;
  int total_steps = 200;
  int value_pretrain_steps = 20;

  // estimation
  double gamma = 1.0;
  double lambda_value = 1.0;
  double alpha_gae = 0.05;
  bool length_adaptive = true;
  double lambda_policy_fixed = 0.95;

  // objective
  double eps_low = 0.2;
  double eps_high = 0.3;
  double mu = 0.1;
  double value_coeff = 0.5;
  double positive_reward_threshold = 0.5;

  // sampling
  double adapt_beta = 0.9;
  double adapt_floor = 0.01;
  int filter_max_rounds = 5;
  double preference_fraction = 0.0;

  // policy shape
  int hidden = 32;
  int value_hidden = 16;
  int window = 8;

  // streaming rollout
  double alpha_onpolicy = 1.0;
  double park_fraction = 0.5;

  PolicyConfig policy_config() const;
  GaeParams gae_params() const;
  ClipParams clip_params() const;
  void validate() const;
  std::uint64_t config_hash() const;
};

RLConfig parse_config_json(const std::string& text);
RLConfig load_config(const std::string& path);
std::string config_to_json(const RLConfig& config);  // fully resolved

}  // namespace deskrl
