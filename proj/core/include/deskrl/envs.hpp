#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "deskrl/tokens.hpp"

namespace deskrl {

enum class TaskId { twentyfour, maze, sudoku4 };

std::string task_name(TaskId task);
std::optional<TaskId> parse_task(const std::string& name);

struct TwentyFourPayload {
  std::vector<int> numbers;  // multiset, values 1..13
  int target = 24;
};

// Rooms grid with open walls between adjacent rooms. The drawn grid side is
// 2*rooms + 1 (walls interleaved with rooms), i.e. 2*difficulty + 3.
struct MazePayload {
  int rooms = 0;                        // rooms per side
  std::vector<std::string> open_right;  // rooms rows x (rooms-1) cols of '0'/'1'
  std::vector<std::string> open_down;   // (rooms-1) rows x rooms cols of '0'/'1'
  int start_r = 0, start_c = 0;
  int goal_r = 0, goal_c = 0;

  bool right_open(int r, int c) const { return open_right[r][c] == '1'; }
  bool down_open(int r, int c) const { return open_down[r][c] == '1'; }
};

struct SudokuPayload {
  std::array<int, 16> givens{};  // row-major, 0 = blank

  std::vector<int> blank_positions() const;
};

struct PuzzleInstance {
  TaskId task = TaskId::twentyfour;
  int difficulty = 1;
  std::uint64_t instance_seed = 0;
  std::variant<TwentyFourPayload, MazePayload, SudokuPayload> payload;
  std::vector<int> reference_solution;  // token ids

  std::uint64_t uid() const;
};

struct Verdict {
  enum class Kind { correct, incorrect, malformed };
  Kind kind = Kind::malformed;
  std::string detail;
};

// --- generators and verifiers -------------------------------------------

PuzzleInstance gen_twentyfour(int difficulty, std::uint64_t seed);
Verdict verify_twentyfour(const PuzzleInstance& instance, const std::vector<int>& answer_tokens);

PuzzleInstance gen_maze(int difficulty, std::uint64_t seed);
Verdict verify_maze(const PuzzleInstance& instance, const std::vector<int>& answer_tokens);

PuzzleInstance gen_sudoku4(int difficulty, std::uint64_t seed);
Verdict verify_sudoku4(const PuzzleInstance& instance, const std::vector<int>& answer_tokens);

PuzzleInstance generate_instance(TaskId task, int difficulty, std::uint64_t seed);
Verdict verify(const PuzzleInstance& instance, const std::vector<int>& answer_tokens);

// correct -> 1.0, anything else -> 0.0.
double reward_from_verdict(const Verdict& verdict);

// --- pairwise preference oracle ------------------------------------------

// Hidden scoring rubric for the synthetic preference oracle: closeness to a
// target length plus coverage of a small required token set.
struct PreferenceRubric {
  int target_length = 8;
  std::array<int, 3> required{};

  static PreferenceRubric from_seed(std::uint64_t rubric_seed);

  // -|len - target|/target + (#required tokens present)/3
  double score(const std::vector<int>& tokens) const;
};

// sigmoid(score(a) - score(b)); antisymmetric around 0.5.
double pairwise_preference(const std::vector<int>& a, const std::vector<int>& b,
                           std::uint64_t rubric_seed);

// --- policy-facing helpers ------------------------------------------------

// Tokens the policy may emit for this instance (bitmask; <end> always set).
std::uint64_t legal_token_mask(const PuzzleInstance& instance);

// Structured instance description for the context encoding's prompt block:
// task one-hot and difficulty, then task-specific layouts (maze wall bits and
// start/goal one-hots, 24-point number counts, sudoku cell one-hots).
inline constexpr int kPromptFeatureDims = 232;
std::vector<double> prompt_features(const PuzzleInstance& instance);

// Generation-state features derived from (instance, prefix): maze position,
// open directions and goal offset, remaining 24-point numbers and paren
// balance, next sudoku blank and its placeable digits. Deterministic in the
// prefix; out must hold kDynamicFeatureDims entries.
inline constexpr int kDynamicFeatureDims = 48;
void dynamic_features(const PuzzleInstance& instance, std::span<const int> prefix,
                      std::span<double> out);

// Structural difficulty measure: expression count / shortest path length /
// blank count. Non-decreasing in the difficulty knob per task.
double search_space_metric(const PuzzleInstance& instance);

// --- dataset format --------------------------------------------------------

// One instance per line: {"task_id","difficulty","payload",
// "reference_solution","instance_seed"}. Deterministic byte output.
std::string instance_to_json_line(const PuzzleInstance& instance);
PuzzleInstance instance_from_json_line(const std::string& line);

}  // namespace deskrl
