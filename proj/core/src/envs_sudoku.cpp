#include <algorithm>
#include <array>

#include "deskrl/common.hpp"
#include "deskrl/envs.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {
namespace {

constexpr int box_of(int pos) { return (pos / 8) * 2 + (pos % 4) / 2; }

bool placement_ok(const std::array<int, 16>& grid, int pos, int digit) {
  const int r = pos / 4, c = pos % 4;
  for (int i = 0; i < 4; ++i) {
    if (grid[r * 4 + i] == digit) return false;
    if (grid[i * 4 + c] == digit) return false;
  }
  for (int i = 0; i < 16; ++i)
    if (box_of(i) == box_of(pos) && grid[i] == digit) return false;
  return true;
}

// Counts completions of a partial grid, stopping at `cap`.
int count_solutions(std::array<int, 16>& grid, int cap) {
  int pos = -1;
  for (int i = 0; i < 16; ++i) {
    if (grid[i] == 0) {
      pos = i;
      break;
    }
  }
  if (pos < 0) return 1;
  int found = 0;
  for (int digit = 1; digit <= 4; ++digit) {
    if (!placement_ok(grid, pos, digit)) continue;
    grid[pos] = digit;
    found += count_solutions(grid, cap - found);
    grid[pos] = 0;
    if (found >= cap) return found;
  }
  return found;
}

bool fill_grid(std::array<int, 16>& grid, int pos, CounterRng& rng) {
  if (pos == 16) return true;
  int digits[4] = {1, 2, 3, 4};
  for (int i = 3; i > 0; --i)
    std::swap(digits[i], digits[rng.next_below(static_cast<std::uint64_t>(i + 1))]);
  for (int digit : digits) {
    if (!placement_ok(grid, pos, digit)) continue;
    grid[pos] = digit;
    if (fill_grid(grid, pos + 1, rng)) return true;
    grid[pos] = 0;
  }
  return false;
}

}  // namespace

PuzzleInstance gen_sudoku4(int difficulty, std::uint64_t seed) {
  if (difficulty < 1 || difficulty > 5) throw InvalidInput("gen_sudoku4: difficulty in 1..5");
  const int blanks_wanted = 2 * difficulty + 2;
  CounterRng rng = CounterRng::keyed({seed, 0x7375646fULL, static_cast<std::uint64_t>(difficulty)});

  while (true) {
    std::array<int, 16> solution{};
    if (!fill_grid(solution, 0, rng)) continue;

    std::array<int, 16> grid = solution;
    int order[16];
    for (int i = 0; i < 16; ++i) order[i] = i;
    for (int i = 15; i > 0; --i)
      std::swap(order[i], order[rng.next_below(static_cast<std::uint64_t>(i + 1))]);

    int blanks = 0;
    for (int pos : order) {
      if (blanks == blanks_wanted) break;
      const int kept = grid[pos];
      grid[pos] = 0;
      std::array<int, 16> probe = grid;
      if (count_solutions(probe, 2) == 1) {
        ++blanks;
      } else {
        grid[pos] = kept;
      }
    }
    if (blanks != blanks_wanted) continue;  // removal order dead-ended; redo

    PuzzleInstance instance;
    instance.task = TaskId::sudoku4;
    instance.difficulty = difficulty;
    instance.instance_seed = seed;
    SudokuPayload payload;
    payload.givens = grid;
    for (int i = 0; i < 16; ++i)
      if (grid[i] == 0) instance.reference_solution.push_back(solution[i]);
    instance.payload = payload;
    return instance;
  }
}

Verdict verify_sudoku4(const PuzzleInstance& instance, const std::vector<int>& answer_tokens) {
  const auto& payload = std::get<SudokuPayload>(instance.payload);
  const std::vector<int> blanks = payload.blank_positions();
  for (int t : answer_tokens) {
    if (t < 1 || t > 4) return {Verdict::Kind::malformed, "token outside digits 1..4"};
  }
  if (answer_tokens.size() != blanks.size())
    return {Verdict::Kind::malformed, "fill count does not match blank count"};

  std::array<int, 16> grid = payload.givens;
  for (std::size_t i = 0; i < blanks.size(); ++i) grid[blanks[i]] = answer_tokens[i];

  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      for (int c2 = c + 1; c2 < 4; ++c2)
        if (grid[r * 4 + c] == grid[r * 4 + c2])
          return {Verdict::Kind::incorrect, "row constraint violated"};
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r)
      for (int r2 = r + 1; r2 < 4; ++r2)
        if (grid[r * 4 + c] == grid[r2 * 4 + c])
          return {Verdict::Kind::incorrect, "column constraint violated"};
  for (int b = 0; b < 4; ++b) {
    int seen[5] = {};
    for (int i = 0; i < 16; ++i)
      if (box_of(i) == b && ++seen[grid[i]] > 1)
        return {Verdict::Kind::incorrect, "box constraint violated"};
  }
  return {Verdict::Kind::correct, "grid satisfies all constraints"};
}

}  // namespace deskrl
