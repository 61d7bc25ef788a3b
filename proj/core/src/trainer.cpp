#include "deskrl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "deskrl/advantage.hpp"
#include "deskrl/common.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {

using nlohmann::json;

namespace {

std::string cell_name(const CellKey& key) {
  return task_name(key.task) + "/" + std::to_string(key.difficulty);
}

DynamicFeatureFn dynamic_fn(const PuzzleInstance& instance) {
  const PuzzleInstance* ptr = &instance;
  return [ptr](std::span<const int> prefix, std::span<double> out) {
    dynamic_features(*ptr, prefix, out);
  };
}

std::vector<double> terminal_reward_vector(const Trajectory& traj) {
  std::vector<double> rewards(traj.length(), 0.0);
  if (!rewards.empty()) rewards.back() = traj.reward;
  return rewards;
}

}  // namespace

std::string StepMetrics::to_json_line() const {
  json pass = json::object();
  for (const auto& [name, rate] : pass_rate) pass[name] = rate;
  json w = json::object();
  for (const auto& [name, weight] : weights) w[name] = weight;
  json stale = json::object();
  for (const auto& [staleness, count] : staleness_hist) stale[std::to_string(staleness)] = count;
  const json record = {{"step", step},
                       {"ppo_loss", ppo_loss},
                       {"value_loss", value_loss},
                       {"nll_loss", nll_loss},
                       {"total_loss", total_loss},
                       {"tokens", token_count},
                       {"mean_response_len", mean_response_len},
                       {"max_response_len", max_response_len},
                       {"mean_reward", mean_reward},
                       {"retained_fraction", retained_fraction},
                       {"resample_rounds", resample_rounds},
                       {"balance", balance},
                       {"pass_rate", pass},
                       {"weights", w},
                       {"staleness", stale}};
  return record.dump();
}

Trainer::Trainer(RLConfig config)
    : cfg_(std::move(config)),
      policy_(Policy::init(cfg_.policy_config(), cfg_.seed)),
      executor_(ExecutorConfig{cfg_.alpha_onpolicy, cfg_.park_fraction,
                               static_cast<std::size_t>(4 * cfg_.prompts_per_batch)},
                cfg_.seed),
      stats_(DomainStats::make(cfg_.cells, cfg_.adapt_beta, cfg_.adapt_floor)) {
  cfg_.validate();
  store_.append(policy_);
}

RewardFn Trainer::default_reward() const {
  return [](const PuzzleInstance& prompt, const Trajectory& traj) {
    return reward_from_verdict(verify(prompt, traj.answer_tokens()));
  };
}

void Trainer::value_pretrain(const RewardFn& reward_fn) {
  if (cfg_.value_pretrain_steps == 0) return;
  const RewardFn reward = reward_fn ? reward_fn : default_reward();
  const std::vector<double> policy_slice_before(policy_.theta.begin(),
                                                policy_.theta.begin() + policy_.off.v1);
  ContextEncoder encoder(policy_.cfg);
  const std::uint64_t vp_seed = hash_mix(cfg_.seed, 0x76616c70726574ULL);

  for (int s = 0; s < cfg_.value_pretrain_steps; ++s) {
    const std::vector<PuzzleInstance> prompts =
        sample_prompts(stats_, cfg_.prompts_per_batch, hash_mix(vp_seed, s));
    std::vector<double> grad(policy_.off.total, 0.0);
    std::size_t n_tokens = 0;

    struct Sampled {
      std::vector<double> features;
      Trajectory traj;
      std::vector<double> targets;
    };
    std::vector<Sampled> batch;
    batch.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      Sampled item;
      item.features = prompt_features(prompts[i]);
      const PromptView view{item.features, dynamic_fn(prompts[i]),
                            legal_token_mask(prompts[i]), prompts[i].uid()};
      item.traj = rollout(policy_, 1, view, cfg_.max_response_len, vp_seed,
                          static_cast<std::uint64_t>(s) * prompts.size() + i);
      item.traj.reward = reward(prompts[i], item.traj);
      item.targets = monte_carlo_returns(terminal_reward_vector(item.traj), cfg_.gamma);
      n_tokens += item.traj.length();
      batch.push_back(std::move(item));
    }
    if (n_tokens == 0) continue;

    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Sampled& item = batch[b];
      const DynamicFeatureFn dyn = dynamic_fn(prompts[b]);
      for (std::size_t t = 0; t < item.traj.length(); ++t) {
        const SparseVec ctx = encoder.encode(
            item.features, dyn, std::span<const int>(item.traj.tokens).subspan(0, t));
        const double err = value_predict(policy_, ctx) - item.targets[t];
        accumulate_value_grad(policy_, ctx, 2.0 * err / static_cast<double>(n_tokens), grad);
      }
    }
    for (std::size_t i = 0; i < policy_.off.total; ++i)
      policy_.theta[i] -= cfg_.learning_rate * grad[i];
  }

  for (std::size_t i = 0; i < policy_.off.v1; ++i) {
    if (policy_.theta[i] != policy_slice_before[i])
      throw std::logic_error("value_pretrain modified policy parameters");
  }
  // Snapshot the pretrained value head so RL rollouts bootstrap from it.
  store_.append(policy_);
}

double Trainer::assign_rewards(std::vector<PromptGroup>& groups, const RewardFn& reward_fn,
                               int round) {
  const bool preference_step =
      cfg_.preference_fraction > 0.0 &&
      CounterRng(hash_mix(cfg_.seed, 0x70726566ULL)).unit_at(static_cast<std::uint64_t>(step_index_)) <
          cfg_.preference_fraction;
  (void)round;
  double reward_sum = 0.0;
  std::size_t n = 0;
  for (PromptGroup& group : groups) {
    for (Trajectory& traj : group.trajectories) {
      if (preference_step) {
        const std::uint64_t rubric_seed = hash_mix(cfg_.seed, 0x7275627269632bULL + step_index_);
        traj.reward = pairwise_preference(traj.answer_tokens(), group.prompt.reference_solution,
                                          rubric_seed);
      } else {
        traj.reward = reward_fn(group.prompt, traj);
      }
      reward_sum += traj.reward;
      ++n;
    }
    group.recompute_accuracy();
  }
  return n == 0 ? 0.0 : reward_sum / static_cast<double>(n);
}

StepMetrics Trainer::step_on_groups(std::vector<PromptGroup> groups) {
  const int version_at_train = store_.latest_version();
  ContextEncoder encoder(policy_.cfg);
  const GaeParams gae = cfg_.gae_params();
  const ClipParams clip = cfg_.clip_params();

  struct Seq {
    const PuzzleInstance* prompt;
    Trajectory* traj;
    std::vector<double> features;
    std::uint64_t mask = 0;
    SeqTensors tensors;
  };
  std::vector<Seq> seqs;
  StepMetrics metrics;
  for (PromptGroup& group : groups) {
    std::vector<double> features = prompt_features(group.prompt);
    const std::uint64_t mask = legal_token_mask(group.prompt);
    for (Trajectory& traj : group.trajectories) {
      if (traj.length() == 0) continue;
      Seq seq;
      seq.prompt = &group.prompt;
      seq.traj = &traj;
      seq.features = features;
      seq.mask = mask;
      seqs.push_back(std::move(seq));
      metrics.staleness_hist[version_at_train - traj.min_version()] += 1;
    }
  }
  if (seqs.empty()) throw InvalidInput("step_on_groups: no non-empty trajectories");

  std::size_t total_tokens = 0;
  std::size_t total_positive_tokens = 0;
  for (Seq& seq : seqs) {
    const PromptView view{seq.features, dynamic_fn(*seq.prompt), seq.mask, seq.prompt->uid()};
    seq.tensors = evaluate_sequence(policy_, view, seq.traj->tokens);
    seq.traj->values = seq.tensors.values;
    const double bootstrap =
        seq.traj->truncated ? value_predict(policy_, seq.tensors.end_context) : 0.0;
    const AdvantageResult est = decoupled_estimates(
        terminal_reward_vector(*seq.traj), seq.traj->values, bootstrap, gae);
    seq.traj->advantages = est.advantages;
    seq.traj->value_targets = est.value_targets;
    total_tokens += seq.traj->length();
    if (seq.traj->reward > cfg_.positive_reward_threshold)
      total_positive_tokens += seq.traj->length();
  }

  // Sequence-length balanced micro-batches.
  std::vector<long long> lengths;
  lengths.reserve(seqs.size());
  for (const Seq& seq : seqs) lengths.push_back(static_cast<long long>(seq.traj->length()));
  const MicroBatchPlan plan = karp_partition(lengths, cfg_.micro_batches);
  metrics.balance = balance_metric(plan);

  // Token-weighted gradient accumulation across micro-batches; equals the
  // whole-batch objective up to floating point reassociation.
  std::vector<double> grad(policy_.off.total, 0.0);
  double ppo_total = 0.0, nll_total = 0.0, value_total = 0.0;
  for (int b = 0; b < plan.m; ++b) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < seqs.size(); ++i)
      if (plan.assignment[i] == b) members.push_back(i);
    if (members.empty()) continue;

    std::vector<SeqView> views;
    views.reserve(members.size());
    std::size_t mb_tokens = 0, mb_positive_tokens = 0;
    for (std::size_t i : members) {
      const Seq& seq = seqs[i];
      views.push_back(SeqView{seq.tensors.logprobs, seq.traj->behavior_logprobs,
                              seq.traj->advantages, seq.tensors.values, seq.traj->value_targets,
                              seq.traj->reward});
      mb_tokens += seq.traj->length();
      if (seq.traj->reward > cfg_.positive_reward_threshold)
        mb_positive_tokens += seq.traj->length();
    }

    const double token_weight =
        static_cast<double>(mb_tokens) / static_cast<double>(total_tokens);
    const double positive_weight =
        total_positive_tokens == 0
            ? 0.0
            : static_cast<double>(mb_positive_tokens) / static_cast<double>(total_positive_tokens);

    TokenGrads token_grads;
    token_grads.resize_like(views);
    ppo_total += token_weight * token_level_ppo_loss(views, clip, &token_grads, token_weight);
    nll_total += positive_weight * positive_example_nll(views, cfg_.positive_reward_threshold,
                                                        &token_grads, cfg_.mu * positive_weight);
    value_total += token_weight * value_mse(views, &token_grads, cfg_.value_coeff * token_weight);

    for (std::size_t m = 0; m < members.size(); ++m) {
      const Seq& seq = seqs[members[m]];
      for (std::size_t t = 0; t < seq.traj->length(); ++t) {
        const double dlp = token_grads.d_logprob[m][t];
        if (dlp != 0.0)
          accumulate_logprob_grad(policy_, seq.tensors.contexts[t], seq.traj->tokens[t], seq.mask,
                                  dlp, grad);
        const double dv = token_grads.d_value[m][t];
        if (dv != 0.0) accumulate_value_grad(policy_, seq.tensors.contexts[t], dv, grad);
      }
    }
  }

  metrics.ppo_loss = ppo_total;
  metrics.nll_loss = nll_total;
  metrics.value_loss = value_total;
  metrics.total_loss = ppo_total + cfg_.mu * nll_total + cfg_.value_coeff * value_total;
  metrics.token_count = total_tokens;
  if (!std::isfinite(metrics.total_loss))
    throw NumericalError("training aborted: non-finite loss at step " +
                         std::to_string(step_index_ + 1));

  for (std::size_t i = 0; i < policy_.off.total; ++i)
    policy_.theta[i] -= cfg_.learning_rate * grad[i];
  store_.append(policy_);
  return metrics;
}

void Trainer::step(const RewardFn& reward_fn) {
  const RewardFn reward = reward_fn ? reward_fn : default_reward();
  all_round_groups_.clear();

  std::vector<PromptGroup> retained;
  double mean_reward = 0.0;
  int rounds_used = 0;
  for (int round = 0;; ++round) {
    const std::uint64_t prompt_seed =
        hash_mix(hash_mix(cfg_.seed, 0x73746570ULL + static_cast<std::uint64_t>(step_index_)),
                 static_cast<std::uint64_t>(round));
    std::vector<PuzzleInstance> prompts =
        sample_prompts(stats_, cfg_.prompts_per_batch, prompt_seed);
    std::vector<PromptGroup> groups = executor_.step(store_, prompts, cfg_.group_size);
    mean_reward = assign_rewards(groups, reward, round);

    last_round_groups_ = groups;
    for (const PromptGroup& g : groups) all_round_groups_.push_back(g);
    retained = dynamic_filter(std::move(groups));
    rounds_used = round;
    if (!retained.empty()) break;
    if (round >= cfg_.filter_max_rounds)
      throw StarvationError("dynamic filter emptied the batch for " +
                            std::to_string(round + 1) + " rounds at step " +
                            std::to_string(step_index_ + 1));
  }

  StepMetrics metrics = step_on_groups(std::move(retained));
  metrics.step = ++step_index_;
  metrics.resample_rounds = rounds_used;
  metrics.retained_fraction = 0.0;
  metrics.mean_reward = mean_reward;

  std::size_t retained_count = 0;
  for (const PromptGroup& g : last_round_groups_)
    if (g.accuracy > 0.0 && g.accuracy < 1.0) ++retained_count;
  metrics.retained_fraction =
      static_cast<double>(retained_count) / static_cast<double>(last_round_groups_.size());

  double len_sum = 0.0;
  std::size_t len_n = 0;
  for (const PromptGroup& g : last_round_groups_) {
    for (const Trajectory& t : g.trajectories) {
      len_sum += static_cast<double>(t.length());
      metrics.max_response_len = std::max(metrics.max_response_len, static_cast<int>(t.length()));
      ++len_n;
    }
  }
  metrics.mean_response_len = len_n == 0 ? 0.0 : len_sum / static_cast<double>(len_n);

  stats_ = update_distribution(std::move(stats_), all_round_groups_);
  for (const auto& [key, cell] : stats_.cells) {
    metrics.pass_rate[cell_name(key)] = cell.ema;
    metrics.weights[cell_name(key)] = cell.weight;
  }

  metrics_.push_back(metrics);
  if (sink_) sink_(metrics_.back());
}

void Trainer::run(const RewardFn& reward_fn) {
  value_pretrain(reward_fn);
  for (int s = 0; s < cfg_.total_steps; ++s) step(reward_fn);
}

EvalResult evaluate(const Policy& policy, TaskId task, int difficulty, int n, int k,
                    std::uint64_t seed, int n_instances, bool greedy) {
  if (n < 1) throw InvalidInput("evaluate: n must be >= 1");
  if (k < 1 || k > n) throw InvalidInput("evaluate: require 1 <= k <= n");
  if (n_instances < 1) throw InvalidInput("evaluate: n_instances must be >= 1");

  ContextEncoder encoder(policy.cfg);
  const std::uint64_t eval_seed = hash_mix(seed, 0x6576616cULL);
  EvalResult result;
  result.n_instances = n_instances;
  result.n = n;
  result.k = k;

  for (int i = 0; i < n_instances; ++i) {
    const PuzzleInstance instance =
        generate_instance(task, difficulty, hash_mix(eval_seed, static_cast<std::uint64_t>(i)));
    const std::vector<double> features = prompt_features(instance);
    const PromptView view{features, dynamic_fn(instance), legal_token_mask(instance),
                          instance.uid()};

    std::vector<bool> outcomes;
    if (greedy) {
      const Trajectory traj = greedy_rollout(policy, 0, view, policy.cfg.max_len);
      const bool ok = verify(instance, traj.answer_tokens()).kind == Verdict::Kind::correct;
      outcomes.assign(static_cast<std::size_t>(n), ok);
    } else {
      for (int j = 0; j < n; ++j) {
        const Trajectory traj = rollout(policy, 0, view, policy.cfg.max_len, eval_seed,
                                        static_cast<std::uint64_t>(j));
        outcomes.push_back(verify(instance, traj.answer_tokens()).kind ==
                           Verdict::Kind::correct);
      }
    }

    EvalInstanceResult per;
    per.instance_seed = instance.instance_seed;
    per.n = n;
    for (bool b : outcomes) per.correct += b ? 1 : 0;
    per.avg_at_k = avg_at_k(outcomes);
    per.pass_at_k = pass_at_k(outcomes, k);
    result.mean_avg_at_k += per.avg_at_k;
    result.mean_pass_at_k += per.pass_at_k;
    result.per_instance.push_back(per);
  }
  result.mean_avg_at_k /= static_cast<double>(n_instances);
  result.mean_pass_at_k /= static_cast<double>(n_instances);
  return result;
}

std::string EvalResult::to_json() const {
  json per = json::array();
  for (const EvalInstanceResult& r : per_instance)
    per.push_back({{"instance_seed", r.instance_seed},
                   {"n", r.n},
                   {"correct", r.correct},
                   {"avg_at_k", r.avg_at_k},
                   {"pass_at_k", r.pass_at_k}});
  const json root = {{"n_instances", n_instances}, {"n", n},
                     {"k", k},                     {"mean_avg_at_k", mean_avg_at_k},
                     {"mean_pass_at_k", mean_pass_at_k}, {"per_instance", per}};
  return root.dump(2);
}

TrainOutcome run_training(const RLConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const auto started = std::chrono::steady_clock::now();

  Trainer trainer(config);
  std::ofstream metrics_stream;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream cfg_out(fs::path(out_dir) / "resolved_config.json");
    cfg_out << config_to_json(config) << "\n";
    metrics_stream.open(fs::path(out_dir) / "metrics.jsonl", std::ios::trunc);
    trainer.set_metrics_sink([&metrics_stream](const StepMetrics& m) {
      metrics_stream << m.to_json_line() << "\n";
      metrics_stream.flush();
    });
  }

  trainer.run();

  TrainOutcome outcome;
  outcome.steps_run = trainer.steps_run();
  outcome.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  outcome.final_policy = trainer.policy();
  outcome.metrics = trainer.metrics();

  if (!out_dir.empty()) {
    save_checkpoint(trainer.policy(), (fs::path(out_dir) / "checkpoint.bin").string(),
                    config.config_hash());
    json summary = {{"steps_run", outcome.steps_run},
                    {"wall_seconds", outcome.wall_seconds},
                    {"final_pass_rate", json::object()}};
    for (const auto& [key, cell] : trainer.stats().cells)
      summary["final_pass_rate"][cell_name(key)] = cell.ema;
    std::ofstream summary_out(fs::path(out_dir) / "run_summary.json");
    summary_out << summary.dump(2) << "\n";
  }
  return outcome;
}

}  // namespace deskrl
