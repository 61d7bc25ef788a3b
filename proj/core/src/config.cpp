#include "deskrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deskrl/common.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {

using nlohmann::json;

PolicyConfig RLConfig::policy_config() const {
  PolicyConfig cfg;
  cfg.alphabet = kAlphabetSize;
  cfg.hidden = hidden;
  cfg.value_hidden = value_hidden;
  cfg.window = window;
  cfg.prompt_dims = kPromptFeatureDims;
  cfg.dynamic_dims = kDynamicFeatureDims;
  cfg.max_len = max_response_len;
  return cfg;
}

GaeParams RLConfig::gae_params() const {
  GaeParams params;
  params.gamma = gamma;
  params.lambda_value = lambda_value;
  params.alpha_gae = alpha_gae;
  params.length_adaptive = length_adaptive;
  params.lambda_policy_fixed = lambda_policy_fixed;
  return params;
}

ClipParams RLConfig::clip_params() const { return ClipParams{eps_low, eps_high}; }

void RLConfig::validate() const {
  if (cells.empty()) throw ConfigError("cells must be non-empty");
  for (const CellKey& c : cells)
    if (c.difficulty < 1 || c.difficulty > 5) throw ConfigError("cell difficulty must be in 1..5");
  if (group_size < 1) throw ConfigError("group_size must be >= 1");
  if (prompts_per_batch < 1) throw ConfigError("prompts_per_batch must be >= 1");
  if (micro_batches < 1) throw ConfigError("micro_batches must be >= 1");
  if (max_response_len < 1) throw ConfigError("max_response_len must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
  if (value_pretrain_steps < 0) throw ConfigError("value_pretrain_steps must be >= 0");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0,1]");
  if (lambda_value < 0.0 || lambda_value > 1.0) throw ConfigError("lambda_value must be in [0,1]");
  if (!(alpha_gae > 0.0)) throw ConfigError("alpha_gae must be > 0");
  if (lambda_policy_fixed < 0.0 || lambda_policy_fixed > 1.0)
    throw ConfigError("lambda_policy_fixed must be in [0,1]");
  if (!(eps_low > 0.0 && eps_low < 1.0)) throw ConfigError("eps_low must be in (0,1)");
  if (!(eps_high > 0.0)) throw ConfigError("eps_high must be > 0");
  if (mu < 0.0) throw ConfigError("mu must be >= 0");
  if (value_coeff < 0.0) throw ConfigError("value_coeff must be >= 0");
  if (adapt_beta < 0.0 || adapt_beta >= 1.0) throw ConfigError("adapt_beta must be in [0,1)");
  if (!(adapt_floor > 0.0)) throw ConfigError("adapt_floor must be > 0");
  if (filter_max_rounds < 0) throw ConfigError("filter_max_rounds must be >= 0");
  if (preference_fraction < 0.0 || preference_fraction > 1.0)
    throw ConfigError("preference_fraction must be in [0,1]");
  if (alpha_onpolicy < 0.0 || alpha_onpolicy > 1.0)
    throw ConfigError("alpha_onpolicy must be in [0,1]");
  if (!(park_fraction > 0.0 && park_fraction <= 1.0))
    throw ConfigError("park_fraction must be in (0,1]");
  policy_config().validate();
}

std::uint64_t RLConfig::config_hash() const {
  std::uint64_t h = 0x636f6e666967ULL;
  const std::string text = config_to_json(*this);
  for (char c : text) h = hash_mix(h, static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  return h;
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (known.find(it.key()) == known.end())
      throw ConfigError("unknown config key: " + where + it.key());
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for config key: ") + key);
  }
}

}  // namespace

RLConfig parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");

  static const std::set<std::string> known = {
      "seed", "cells", "group_size", "prompts_per_batch", "micro_batches", "max_response_len",
      "learning_rate", "total_steps", "value_pretrain_steps", "gamma", "lambda_value",
      "alpha_gae", "length_adaptive", "lambda_policy_fixed", "eps_low", "eps_high", "mu",
      "value_coeff", "positive_reward_threshold", "adapt_beta", "adapt_floor",
      "filter_max_rounds", "preference_fraction", "hidden", "value_hidden", "window",
      "srs"};
  reject_unknown(root, known, "");

  RLConfig cfg;
  read(root, "seed", cfg.seed);
  read(root, "group_size", cfg.group_size);
  read(root, "prompts_per_batch", cfg.prompts_per_batch);
  read(root, "micro_batches", cfg.micro_batches);
  read(root, "max_response_len", cfg.max_response_len);
  read(root, "learning_rate", cfg.learning_rate);
  read(root, "total_steps", cfg.total_steps);
  read(root, "value_pretrain_steps", cfg.value_pretrain_steps);
  read(root, "gamma", cfg.gamma);
  read(root, "lambda_value", cfg.lambda_value);
  read(root, "alpha_gae", cfg.alpha_gae);
  read(root, "length_adaptive", cfg.length_adaptive);
  read(root, "lambda_policy_fixed", cfg.lambda_policy_fixed);
  read(root, "eps_low", cfg.eps_low);
  read(root, "eps_high", cfg.eps_high);
  read(root, "mu", cfg.mu);
  read(root, "value_coeff", cfg.value_coeff);
  read(root, "positive_reward_threshold", cfg.positive_reward_threshold);
  read(root, "adapt_beta", cfg.adapt_beta);
  read(root, "adapt_floor", cfg.adapt_floor);
  read(root, "filter_max_rounds", cfg.filter_max_rounds);
  read(root, "preference_fraction", cfg.preference_fraction);
  read(root, "hidden", cfg.hidden);
  read(root, "value_hidden", cfg.value_hidden);
  read(root, "window", cfg.window);

  if (root.contains("cells")) {
    if (!root.at("cells").is_array()) throw ConfigError("cells must be an array");
    cfg.cells.clear();
    for (const json& cell : root.at("cells")) {
      if (!cell.is_object()) throw ConfigError("each cell must be an object");
      reject_unknown(cell, {"task", "difficulty"}, "cells.");
      std::string task_str;
      int difficulty = 0;
      read(cell, "task", task_str);
      read(cell, "difficulty", difficulty);
      const auto task = parse_task(task_str);
      if (!task) throw ConfigError("unknown task in cells: " + task_str);
      cfg.cells.push_back(CellKey{*task, difficulty});
    }
  }

  if (root.contains("srs")) {
    const json& srs = root.at("srs");
    if (!srs.is_object()) throw ConfigError("srs must be an object");
    reject_unknown(srs, {"alpha_onpolicy", "park_fraction"}, "srs.");
    read(srs, "alpha_onpolicy", cfg.alpha_onpolicy);
    read(srs, "park_fraction", cfg.park_fraction);
  }

  cfg.validate();
  return cfg;
}

RLConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

std::string config_to_json(const RLConfig& cfg) {
  json cells = json::array();
  for (const CellKey& c : cfg.cells)
    cells.push_back({{"task", task_name(c.task)}, {"difficulty", c.difficulty}});
  const json root = {{"seed", cfg.seed},
                     {"cells", cells},
                     {"group_size", cfg.group_size},
                     {"prompts_per_batch", cfg.prompts_per_batch},
                     {"micro_batches", cfg.micro_batches},
                     {"max_response_len", cfg.max_response_len},
                     {"learning_rate", cfg.learning_rate},
                     {"total_steps", cfg.total_steps},
                     {"value_pretrain_steps", cfg.value_pretrain_steps},
                     {"gamma", cfg.gamma},
                     {"lambda_value", cfg.lambda_value},
                     {"alpha_gae", cfg.alpha_gae},
                     {"length_adaptive", cfg.length_adaptive},
                     {"lambda_policy_fixed", cfg.lambda_policy_fixed},
                     {"eps_low", cfg.eps_low},
                     {"eps_high", cfg.eps_high},
                     {"mu", cfg.mu},
                     {"value_coeff", cfg.value_coeff},
                     {"positive_reward_threshold", cfg.positive_reward_threshold},
                     {"adapt_beta", cfg.adapt_beta},
                     {"adapt_floor", cfg.adapt_floor},
                     {"filter_max_rounds", cfg.filter_max_rounds},
                     {"preference_fraction", cfg.preference_fraction},
                     {"hidden", cfg.hidden},
                     {"value_hidden", cfg.value_hidden},
                     {"window", cfg.window},
                     {"srs",
                      {{"alpha_onpolicy", cfg.alpha_onpolicy},
                       {"park_fraction", cfg.park_fraction}}}};
  return root.dump(2);
}

}  // namespace deskrl
