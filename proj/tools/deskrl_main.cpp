// deskrl: train/eval/gen/verify/simulate for the desk-scale RL training kit.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deskrl/common.hpp"
#include "deskrl/config.hpp"
#include "deskrl/envs.hpp"
#include "deskrl/rng.hpp"
#include "deskrl/sim.hpp"
#include "deskrl/tokens.hpp"
#include "deskrl/trainer.hpp"

namespace {

using nlohmann::json;

deskrl::TaskId require_task(const std::string& name) {
  const auto task = deskrl::parse_task(name);
  if (!task) throw deskrl::ConfigError("unknown task: " + name);
  return *task;
}

std::string verdict_name(deskrl::Verdict::Kind kind) {
  switch (kind) {
    case deskrl::Verdict::Kind::correct: return "correct";
    case deskrl::Verdict::Kind::incorrect: return "incorrect";
    case deskrl::Verdict::Kind::malformed: return "malformed";
  }
  return "?";
}

json iteration_to_json(const deskrl::IterationRecord& rec) {
  json stale = json::object();
  for (const auto& [staleness, count] : rec.staleness_hist)
    stale[std::to_string(staleness)] = count;
  return {{"iteration", rec.iteration},
          {"fired_at", rec.fired_at},
          {"duration", rec.duration},
          {"fresh", rec.fresh_used},
          {"pooled", rec.pooled_used},
          {"idle_fraction", rec.main_idle_fraction},
          {"tokens", rec.tokens_consumed},
          {"staleness", stale}};
}

void write_iterations(const deskrl::SimResult& result, const std::string& mode,
                      std::ostream& out) {
  for (const auto& rec : result.iterations) {
    json line = iteration_to_json(rec);
    line["mode"] = mode;
    out << line.dump() << "\n";
  }
}

int run(int argc, char** argv) {
  CLI::App app{"desk-scale RL training kit on verifiable puzzle tasks"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "run value pretraining and the RL loop");
  std::string config_path, out_dir;
  train_cmd->add_option("--config", config_path, "config JSON file")->required();
  train_cmd->add_option("--out", out_dir, "output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint with avg@k and pass@k");
  std::string ckpt_path, eval_task;
  int eval_difficulty = 1, eval_n = 8, eval_k = 8, eval_instances = 50;
  std::uint64_t eval_seed = 0;
  bool eval_greedy = false;
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--task", eval_task, "twentyfour|maze|sudoku4")->required();
  eval_cmd->add_option("--difficulty", eval_difficulty, "difficulty 1..5")->required();
  eval_cmd->add_option("--n", eval_n, "samples per instance")->required();
  eval_cmd->add_option("--k", eval_k, "k for pass@k")->required();
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed")->required();
  eval_cmd->add_option("--instances", eval_instances, "instance count");
  eval_cmd->add_flag("--greedy", eval_greedy, "greedy decoding");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "generate puzzle instances as JSON lines");
  std::string gen_task, gen_out;
  int gen_difficulty = 1, gen_count = 10;
  std::uint64_t gen_seed = 0;
  gen_cmd->add_option("--task", gen_task, "twentyfour|maze|sudoku4")->required();
  gen_cmd->add_option("--difficulty", gen_difficulty, "difficulty 1..5")->required();
  gen_cmd->add_option("--count", gen_count, "number of instances");
  gen_cmd->add_option("--seed", gen_seed, "generator seed")->required();
  gen_cmd->add_option("--out", gen_out, "output file (default stdout)");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "verify answers against instances");
  std::string verify_instances, answers_path, single_answer;
  int answer_index = 0;
  verify_cmd->add_option("--instances", verify_instances, "instance JSONL file")->required();
  verify_cmd->add_option("--answers", answers_path, "answer text file, one per instance line");
  verify_cmd->add_option("--answer", single_answer, "verify one answer string");
  verify_cmd->add_option("--index", answer_index, "instance index for --answer");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "rollout scheduler simulation");
  std::string sim_mode = "compare", sim_out;
  deskrl::SrsConfig srs;
  int sim_iterations = 200;
  std::uint64_t sim_seed = 0;
  sim_cmd->add_option("--mode", sim_mode, "sync|streaming|compare");
  sim_cmd->add_option("--alpha", srs.alpha_onpolicy, "on-policy completion ratio");
  sim_cmd->add_option("--batch", srs.batch_size, "training batch size");
  sim_cmd->add_option("--main-units", srs.n_main_units, "main generation units (0 = batch)");
  sim_cmd->add_option("--standalone", srs.n_standalone_units, "standalone streaming units");
  sim_cmd->add_option("--rate", srs.tokens_per_unit_per_tick, "tokens per unit per tick");
  sim_cmd->add_option("--fp8", srs.fp8_speedup, "standalone speed multiplier");
  sim_cmd->add_option("--mu", srs.lognormal_mu, "lognormal mu of response length");
  sim_cmd->add_option("--sigma", srs.lognormal_sigma, "lognormal sigma");
  sim_cmd->add_option("--max-len", srs.max_length, "response length cap");
  sim_cmd->add_option("--iterations", sim_iterations, "timed iterations");
  sim_cmd->add_option("--seed", sim_seed, "simulation seed")->required();
  sim_cmd->add_option("--out", sim_out, "iteration records file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (train_cmd->parsed()) {
    const deskrl::RLConfig config = deskrl::load_config(config_path);
    const deskrl::TrainOutcome outcome = deskrl::run_training(config, out_dir);
    std::cout << json({{"steps_run", outcome.steps_run},
                       {"wall_seconds", outcome.wall_seconds},
                       {"out", out_dir}})
                     .dump()
              << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const deskrl::Policy policy = deskrl::load_checkpoint(ckpt_path);
    const deskrl::EvalResult result =
        deskrl::evaluate(policy, require_task(eval_task), eval_difficulty, eval_n, eval_k,
                         eval_seed, eval_instances, eval_greedy);
    std::cout << result.to_json() << "\n";
    return 0;
  }

  if (gen_cmd->parsed()) {
    std::ofstream file;
    if (!gen_out.empty()) {
      file.open(gen_out, std::ios::trunc);
      if (!file) throw deskrl::ConfigError("cannot open output file: " + gen_out);
    }
    std::ostream& out = gen_out.empty() ? std::cout : file;
    const deskrl::TaskId task = require_task(gen_task);
    for (int i = 0; i < gen_count; ++i) {
      const auto instance = deskrl::generate_instance(
          task, gen_difficulty, deskrl::hash_mix(gen_seed, static_cast<std::uint64_t>(i)));
      out << deskrl::instance_to_json_line(instance) << "\n";
    }
    return 0;
  }

  if (verify_cmd->parsed()) {
    std::ifstream in(verify_instances);
    if (!in) throw deskrl::ConfigError("cannot open instances file: " + verify_instances);
    std::vector<deskrl::PuzzleInstance> instances;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      instances.push_back(deskrl::instance_from_json_line(line));
    }

    std::vector<std::pair<int, std::string>> answers;
    if (!answers_path.empty()) {
      std::ifstream ans(answers_path);
      if (!ans) throw deskrl::ConfigError("cannot open answers file: " + answers_path);
      int index = 0;
      while (std::getline(ans, line)) answers.emplace_back(index++, line);
    } else if (verify_cmd->count("--answer") > 0) {
      answers.emplace_back(answer_index, single_answer);
    } else {
      // Default: check each instance's own reference solution.
      for (std::size_t i = 0; i < instances.size(); ++i)
        answers.emplace_back(static_cast<int>(i),
                             deskrl::detokenize(instances[i].reference_solution));
    }

    for (const auto& [index, answer] : answers) {
      if (index < 0 || index >= static_cast<int>(instances.size()))
        throw deskrl::ConfigError("answer index out of range: " + std::to_string(index));
      const auto tokens = deskrl::tokenize(answer);
      deskrl::Verdict verdict;
      if (!tokens) {
        verdict = {deskrl::Verdict::Kind::malformed, "unparseable answer text"};
      } else {
        verdict = deskrl::verify(instances[static_cast<std::size_t>(index)], *tokens);
      }
      std::cout << json({{"index", index},
                         {"kind", verdict_name(verdict.kind)},
                         {"detail", verdict.detail},
                         {"reward", deskrl::reward_from_verdict(verdict)}})
                       .dump()
                << "\n";
    }
    return 0;
  }

  if (sim_cmd->parsed()) {
    std::ofstream file;
    if (!sim_out.empty()) {
      file.open(sim_out, std::ios::trunc);
      if (!file) throw deskrl::ConfigError("cannot open output file: " + sim_out);
    }
    std::ostream& out = sim_out.empty() ? std::cout : file;

    if (sim_mode == "sync" || sim_mode == "streaming") {
      const deskrl::SimResult result =
          sim_mode == "sync" ? deskrl::simulate_sync(srs, sim_iterations, sim_seed)
                             : deskrl::simulate_streaming(srs, sim_iterations, sim_seed);
      write_iterations(result, sim_mode, out);
      std::cout << json({{"mode", sim_mode},
                         {"mean_iteration_time", result.mean_iteration_time},
                         {"mean_idle_fraction", result.mean_idle_fraction},
                         {"tokens_per_tick", result.tokens_per_tick}})
                       .dump()
                << "\n";
      return 0;
    }
    if (sim_mode != "compare") throw deskrl::ConfigError("unknown simulate mode: " + sim_mode);
    const deskrl::CompareResult cmp = deskrl::compare_schedulers(srs, sim_iterations, sim_seed);
    write_iterations(cmp.sync, "sync", out);
    write_iterations(cmp.streaming, "streaming", out);
    std::cout << json({{"mode", "compare"},
                       {"sync_mean_iteration_time", cmp.sync.mean_iteration_time},
                       {"streaming_mean_iteration_time", cmp.streaming.mean_iteration_time},
                       {"iteration_speedup", cmp.iteration_speedup},
                       {"token_throughput_ratio", cmp.token_throughput_ratio},
                       {"sync_idle_fraction", cmp.sync.mean_idle_fraction},
                       {"streaming_idle_fraction", cmp.streaming.mean_idle_fraction}})
                     .dump()
              << "\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const deskrl::StarvationError& e) {
    std::cerr << "starvation: " << e.what() << "\n";
    return 3;
  } catch (const deskrl::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 4;
  } catch (const deskrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const deskrl::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
