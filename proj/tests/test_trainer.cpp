#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "deskrl/common.hpp"
#include "deskrl/config.hpp"
#include "deskrl/rng.hpp"
#include "deskrl/trainer.hpp"
#include "reference_ppo.hpp"

using namespace deskrl;

namespace {

RLConfig small_maze_config() {
  RLConfig cfg;
  cfg.seed = 17;
  cfg.cells = {{TaskId::maze, 1}};
  cfg.prompts_per_batch = 8;
  cfg.group_size = 8;
  cfg.total_steps = 3;
  cfg.value_pretrain_steps = 2;
  cfg.learning_rate = 0.3;
  cfg.alpha_gae = 2.0;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  const RLConfig defaults = parse_config_json("{}");
  CHECK(defaults.seed == 17);
  CHECK(defaults.gamma == 1.0);
  CHECK(defaults.cells.size() == 1);

  const RLConfig parsed = parse_config_json(
      R"({"seed": 5, "cells": [{"task": "sudoku4", "difficulty": 3}],
          "eps_low": 0.1, "eps_high": 0.4, "srs": {"alpha_onpolicy": 0.5}})");
  CHECK(parsed.seed == 5);
  CHECK(parsed.cells[0].task == TaskId::sudoku4);
  CHECK(parsed.eps_low == 0.1);
  CHECK(parsed.alpha_onpolicy == 0.5);

  CHECK_THROWS_AS(parse_config_json(R"({"unknown_knob": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"srs": {"bogus": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"cells": [{"task": "chess", "difficulty": 1}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"gamma": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"eps_low": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"cells": []})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("not json"), ConfigError);

  // Resolved round trip parses back to itself.
  const std::string dumped = config_to_json(parsed);
  const RLConfig back = parse_config_json(dumped);
  CHECK(config_to_json(back) == dumped);
  CHECK(back.config_hash() == parsed.config_hash());
}

TEST_CASE("value pretraining regresses onto Monte-Carlo returns") {
  RLConfig cfg = small_maze_config();
  cfg.value_pretrain_steps = 120;
  cfg.learning_rate = 0.5;
  Trainer trainer(cfg);
  const std::vector<double> theta_before = trainer.policy().theta;

  // Deterministic reward: every trajectory is positive, so every on-path
  // value target is exactly 1 under gamma = 1.
  trainer.value_pretrain([](const PuzzleInstance&, const Trajectory&) { return 1.0; });

  const Policy& policy = trainer.policy();
  const auto [value_begin, value_end] = policy.value_param_range();
  for (std::size_t i = 0; i < value_begin; ++i)
    CHECK(policy.theta[i] == theta_before[i]);  // policy slice untouched, bitwise

  // On-path predictions near 1.
  const PuzzleInstance probe = gen_maze(1, 123);
  const std::vector<double> features = prompt_features(probe);
  const PromptView view{features,
                        [&probe](std::span<const int> prefix, std::span<double> out) {
                          dynamic_features(probe, prefix, out);
                        },
                        legal_token_mask(probe), probe.uid()};
  const Trajectory traj = rollout(policy, 1, view, policy.cfg.max_len, 555, 0);
  const SeqTensors tensors = evaluate_sequence(policy, view, traj.tokens);
  for (double v : tensors.values) CHECK(std::abs(v - 1.0) < 0.05);
}

TEST_CASE("zero pretraining steps change nothing") {
  RLConfig cfg = small_maze_config();
  cfg.value_pretrain_steps = 0;
  Trainer trainer(cfg);
  const std::vector<double> before = trainer.policy().theta;
  trainer.value_pretrain();
  CHECK(trainer.policy().theta == before);
}

TEST_CASE("training steps are deterministic") {
  const RLConfig cfg = small_maze_config();
  Trainer a(cfg), b(cfg);
  a.run();
  b.run();
  REQUIRE(a.metrics().size() == b.metrics().size());
  for (std::size_t i = 0; i < a.metrics().size(); ++i)
    CHECK(a.metrics()[i].to_json_line() == b.metrics()[i].to_json_line());
  CHECK(a.policy().theta == b.policy().theta);
}

TEST_CASE("learning rate zero freezes the parameters") {
  RLConfig cfg = small_maze_config();
  cfg.learning_rate = 0.0;
  cfg.total_steps = 4;
  Trainer trainer(cfg);
  const std::vector<double> init = trainer.policy().theta;
  trainer.run();
  CHECK(trainer.policy().theta == init);
  for (const StepMetrics& m : trainer.metrics()) CHECK(m.mean_reward < 0.1);
}

TEST_CASE("metrics accounting is consistent") {
  RLConfig cfg = small_maze_config();
  cfg.total_steps = 5;
  Trainer trainer(cfg);
  trainer.run();
  REQUIRE(trainer.metrics().size() == 5);
  int expected_step = 1;
  for (const StepMetrics& m : trainer.metrics()) {
    CHECK(m.step == expected_step++);
    CHECK(m.token_count > 0);
    CHECK(m.balance >= 1.0);
    CHECK(m.retained_fraction > 0.0);
    CHECK(m.retained_fraction <= 1.0);
    CHECK(m.resample_rounds >= 0);
    CHECK(m.resample_rounds <= cfg.filter_max_rounds);
    CHECK(m.pass_rate.count("maze/1") == 1);
    CHECK(m.weights.at("maze/1") == 1.0);
    std::size_t stale_total = 0;
    for (const auto& [s, n] : m.staleness_hist) stale_total += static_cast<std::size_t>(n);
    CHECK(stale_total > 0);
  }
}

TEST_CASE("an unsolvable cell starves the dynamic filter") {
  RLConfig cfg;
  cfg.cells = {{TaskId::sudoku4, 5}};
  cfg.max_response_len = 4;  // answers need 12 fills: every reward is 0
  cfg.prompts_per_batch = 4;
  cfg.group_size = 4;
  cfg.total_steps = 1;
  cfg.value_pretrain_steps = 0;
  cfg.filter_max_rounds = 2;
  Trainer trainer(cfg);
  CHECK_THROWS_AS(trainer.run(), StarvationError);
}

TEST_CASE("run_training writes a consistent artifact set") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "deskrl_test_run";
  fs::remove_all(dir);

  RLConfig cfg = small_maze_config();
  const TrainOutcome outcome = run_training(cfg, dir.string());
  CHECK(outcome.steps_run == cfg.total_steps);
  CHECK(fs::exists(dir / "metrics.jsonl"));
  CHECK(fs::exists(dir / "resolved_config.json"));
  CHECK(fs::exists(dir / "run_summary.json"));

  std::ifstream metrics(dir / "metrics.jsonl");
  int lines = 0;
  std::string line;
  while (std::getline(metrics, line)) ++lines;
  CHECK(lines == cfg.total_steps);

  // Checkpoint round trip: save -> load -> save gives identical bytes.
  std::uint64_t hash = 0;
  const Policy loaded = load_checkpoint((dir / "checkpoint.bin").string(), &hash);
  CHECK(hash == cfg.config_hash());
  CHECK(loaded.theta == outcome.final_policy.theta);
  save_checkpoint(loaded, (dir / "checkpoint2.bin").string(), hash);
  std::ifstream f1(dir / "checkpoint.bin", std::ios::binary);
  std::ifstream f2(dir / "checkpoint2.bin", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  fs::remove_all(dir);
}

TEST_CASE("preference reward steps stay in (0,1) and filter sanely") {
  RLConfig cfg = small_maze_config();
  cfg.preference_fraction = 1.0;  // every step scores by the pairwise oracle
  cfg.total_steps = 2;
  cfg.value_pretrain_steps = 0;
  Trainer trainer(cfg);
  trainer.run();
  for (const StepMetrics& m : trainer.metrics()) {
    CHECK(m.mean_reward > 0.0);
    CHECK(m.mean_reward < 1.0);
  }
}

TEST_CASE("vanilla PPO reduction on a pinned batch") {
  RLConfig cfg;
  cfg.seed = 101;
  cfg.cells = {{TaskId::maze, 1}};
  cfg.prompts_per_batch = 4;
  cfg.group_size = 4;
  cfg.micro_batches = 3;
  cfg.mu = 0.0;
  cfg.eps_low = 0.2;
  cfg.eps_high = 0.2;
  cfg.alpha_onpolicy = 1.0;
  cfg.length_adaptive = false;
  cfg.lambda_policy_fixed = 0.95;
  cfg.lambda_value = 0.95;
  cfg.gamma = 1.0;
  cfg.value_coeff = 0.5;
  cfg.learning_rate = 0.1;
  cfg.value_pretrain_steps = 0;
  cfg.total_steps = 0;

  Trainer trainer(cfg);

  // A pinned batch with hand-assigned mixed rewards; copies go to both routes.
  RolloutExecutor executor(ExecutorConfig{1.0, 0.5, 16}, cfg.seed);
  std::vector<PuzzleInstance> prompts;
  for (int i = 0; i < 4; ++i) prompts.push_back(gen_maze(1, 1000 + static_cast<std::uint64_t>(i)));
  std::vector<PromptGroup> groups = trainer.snapshots().latest() != nullptr
                                        ? executor.step(trainer.snapshots(), prompts, 4)
                                        : std::vector<PromptGroup>{};
  REQUIRE(groups.size() == 4);
  int flip = 0;
  for (PromptGroup& g : groups) {
    for (Trajectory& t : g.trajectories) t.reward = (flip++ % 2 == 0) ? 1.0 : 0.0;
    g.recompute_accuracy();
  }

  Policy reference = trainer.policy();
  deskrl_test::ReferencePpoConfig ref_cfg;
  ref_cfg.gamma = cfg.gamma;
  ref_cfg.lambda = cfg.lambda_value;
  ref_cfg.clip_eps = cfg.eps_low;
  ref_cfg.value_coeff = cfg.value_coeff;
  ref_cfg.learning_rate = cfg.learning_rate;
  deskrl_test::reference_ppo_step(reference, groups, ref_cfg);

  trainer.step_on_groups(groups);

  REQUIRE(reference.theta.size() == trainer.policy().theta.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < reference.theta.size(); ++i)
    worst = std::max(worst, std::abs(reference.theta[i] - trainer.policy().theta[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("evaluate on an imitation-fitted policy reaches 1.0") {
  RLConfig cfg;
  cfg.max_response_len = 16;
  Policy policy = Policy::init(cfg.policy_config(), 7);

  // Supervised fit of the reference solutions of difficulty-1 mazes: gradient
  // ascent on sum log pi(reference | prompt).
  struct Example {
    PuzzleInstance inst;
    std::vector<double> features;
    Trajectory traj;
  };
  std::vector<Example> examples;
  for (std::uint64_t s = 0; s < 24; ++s) {
    Example e;
    e.inst = gen_maze(1, s);
    e.features = prompt_features(e.inst);
    e.traj.tokens = e.inst.reference_solution;
    e.traj.tokens.push_back(kTokEnd);
    examples.push_back(std::move(e));
  }
  for (int iter = 0; iter < 150; ++iter) {
    std::vector<double> grad(policy.param_count(), 0.0);
    for (const Example& e : examples) {
      const PuzzleInstance* inst = &e.inst;
      const PromptView view{e.features,
                            [inst](std::span<const int> prefix, std::span<double> out) {
                              dynamic_features(*inst, prefix, out);
                            },
                            legal_token_mask(e.inst), e.inst.uid()};
      const LogprobGradResult res = logprob_grad(policy, view, e.traj);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += res.grad[i];
    }
    for (std::size_t i = 0; i < grad.size(); ++i)
      policy.theta[i] += 0.05 * grad[i] / static_cast<double>(examples.size());
  }

  const EvalResult greedy = evaluate(policy, TaskId::maze, 1, 4, 2, 31, 20, true);
  CHECK(greedy.mean_avg_at_k == 1.0);
  CHECK(greedy.mean_pass_at_k == 1.0);

  // n = k = 1 makes the estimator the plain average.
  const EvalResult single = evaluate(policy, TaskId::maze, 1, 1, 1, 31, 20, false);
  CHECK(single.mean_pass_at_k == doctest::Approx(single.mean_avg_at_k).epsilon(1e-12));
}

TEST_CASE("a uniform policy cannot solve difficulty-5 sudoku") {
  RLConfig cfg;
  const Policy policy = Policy::init(cfg.policy_config(), 3);
  const EvalResult result = evaluate(policy, TaskId::sudoku4, 5, 8, 8, 13, 30, false);
  CHECK(result.mean_pass_at_k < 0.05);
  CHECK_THROWS_AS(evaluate(policy, TaskId::sudoku4, 5, 4, 8, 13, 5, false), InvalidInput);
}
