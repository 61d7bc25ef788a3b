// End-to-end exercises of the deskrl binary: subcommands, file formats and
// exit codes. DESKRL_CLI_PATH is injected by CMake.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommandResult {
  int exit_code = -1;
  std::string stdout_text;
};

CommandResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "deskrl_cli_stdout.txt";
  const std::string command =
      std::string(DESKRL_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.stdout_text = buffer.str();
  return result;
}

std::vector<json> parse_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "deskrl_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("gen and verify round trip through the dataset format") {
  const fs::path dir = work_dir();
  const fs::path data = dir / "maze.jsonl";
  CHECK(run_cli("gen --task maze --difficulty 2 --count 5 --seed 3 --out " + data.string())
            .exit_code == 0);

  std::ifstream in(data);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const json record = json::parse(line);
    CHECK(record.at("task_id") == "maze");
    CHECK(record.at("difficulty") == 2);
    CHECK(record.contains("payload"));
    CHECK(record.contains("reference_solution"));
    CHECK(record.contains("instance_seed"));
    ++lines;
  }
  CHECK(lines == 5);

  // Default mode verifies each instance's own reference solution.
  const CommandResult verify = run_cli("verify --instances " + data.string());
  CHECK(verify.exit_code == 0);
  const auto verdicts = parse_lines(verify.stdout_text);
  CHECK(verdicts.size() == 5);
  for (const json& v : verdicts) {
    CHECK(v.at("kind") == "correct");
    CHECK(v.at("reward") == 1.0);
  }

  const CommandResult bad =
      run_cli("verify --instances " + data.string() + " --answer \"U U U U U U U\" --index 1");
  CHECK(bad.exit_code == 0);
  CHECK(parse_lines(bad.stdout_text)[0].at("kind") != "correct");

  const CommandResult junk =
      run_cli("verify --instances " + data.string() + " --answer \"?!?\" --index 0");
  CHECK(parse_lines(junk.stdout_text)[0].at("kind") == "malformed");
}

TEST_CASE("simulate emits records and a summary") {
  const fs::path dir = work_dir();
  const fs::path records = dir / "sim.jsonl";
  const CommandResult result = run_cli(
      "simulate --mode compare --alpha 0.8 --batch 16 --standalone 2 --iterations 50 --seed 7 "
      "--out " +
      records.string());
  CHECK(result.exit_code == 0);
  const json summary = json::parse(result.stdout_text);
  CHECK(summary.at("mode") == "compare");
  CHECK(summary.at("iteration_speedup").get<double>() > 1.0);

  std::ifstream in(records);
  std::string line;
  int sync_lines = 0, streaming_lines = 0;
  while (std::getline(in, line)) {
    const json record = json::parse(line);
    if (record.at("mode") == "sync") ++sync_lines;
    if (record.at("mode") == "streaming") ++streaming_lines;
    CHECK(record.contains("duration"));
    CHECK(record.contains("idle_fraction"));
    CHECK(record.contains("staleness"));
  }
  CHECK(sync_lines == 50);
  CHECK(streaming_lines == 50);
}

TEST_CASE("invalid configurations exit with code 2") {
  CHECK(run_cli("simulate --mode streaming --alpha 0.5 --standalone 0 --seed 1").exit_code == 2);
  CHECK(run_cli("gen --task chess --difficulty 1 --seed 1").exit_code == 2);
  CHECK(run_cli("verify --instances /nonexistent.jsonl").exit_code == 2);

  const fs::path dir = work_dir();
  const fs::path bad_cfg = dir / "bad.json";
  std::ofstream(bad_cfg) << R"({"bogus_key": 1})";
  CHECK(run_cli("train --config " + bad_cfg.string() + " --out " + (dir / "r").string())
            .exit_code == 2);
}

TEST_CASE("train then eval end to end") {
  const fs::path dir = work_dir();
  const fs::path cfg_path = dir / "train.json";
  std::ofstream(cfg_path) << R"({"seed": 17, "cells": [{"task": "maze", "difficulty": 1}],
      "total_steps": 5, "value_pretrain_steps": 2, "prompts_per_batch": 8,
      "group_size": 8, "learning_rate": 0.3, "alpha_gae": 2.0})";
  const fs::path run_dir = dir / "run";
  fs::remove_all(run_dir);

  const CommandResult train =
      run_cli("train --config " + cfg_path.string() + " --out " + run_dir.string());
  CHECK(train.exit_code == 0);
  CHECK(json::parse(train.stdout_text).at("steps_run") == 5);
  CHECK(fs::exists(run_dir / "metrics.jsonl"));
  CHECK(fs::exists(run_dir / "checkpoint.bin"));
  CHECK(fs::exists(run_dir / "resolved_config.json"));
  CHECK(fs::exists(run_dir / "run_summary.json"));

  std::ifstream metrics(run_dir / "metrics.jsonl");
  std::string line;
  int steps = 0;
  while (std::getline(metrics, line)) {
    const json record = json::parse(line);
    CHECK(record.at("step") == steps + 1);
    CHECK(record.contains("ppo_loss"));
    CHECK(record.contains("pass_rate"));
    CHECK(record.contains("balance"));
    CHECK(record.contains("staleness"));
    ++steps;
  }
  CHECK(steps == 5);

  const CommandResult eval = run_cli("eval --ckpt " + (run_dir / "checkpoint.bin").string() +
                                     " --task maze --difficulty 1 --n 4 --k 2 --seed 9 "
                                     "--instances 10");
  CHECK(eval.exit_code == 0);
  const json report = json::parse(eval.stdout_text);
  CHECK(report.at("n_instances") == 10);
  CHECK(report.at("per_instance").size() == 10);
  CHECK(report.at("mean_pass_at_k").get<double>() >= 0.0);
}

TEST_CASE("starvation exits with code 3") {
  const fs::path dir = work_dir();
  const fs::path cfg_path = dir / "starve.json";
  std::ofstream(cfg_path) << R"({"cells": [{"task": "sudoku4", "difficulty": 5}],
      "max_response_len": 4, "prompts_per_batch": 4, "group_size": 4,
      "total_steps": 1, "value_pretrain_steps": 0, "filter_max_rounds": 1})";
  CHECK(run_cli("train --config " + cfg_path.string() + " --out " + (dir / "sr").string())
            .exit_code == 3);
}
