#include "deskrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "deskrl/common.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {

using nlohmann::json;

std::string task_name(TaskId task) {
  switch (task) {
    case TaskId::twentyfour: return "twentyfour";
    case TaskId::maze: return "maze";
    case TaskId::sudoku4: return "sudoku4";
  }
  return "?";
}

std::optional<TaskId> parse_task(const std::string& name) {
  if (name == "twentyfour") return TaskId::twentyfour;
  if (name == "maze") return TaskId::maze;
  if (name == "sudoku4") return TaskId::sudoku4;
  return std::nullopt;
}

std::vector<int> SudokuPayload::blank_positions() const {
  std::vector<int> out;
  for (int i = 0; i < 16; ++i)
    if (givens[i] == 0) out.push_back(i);
  return out;
}

std::uint64_t PuzzleInstance::uid() const {
  std::uint64_t h = hash_mix(static_cast<std::uint64_t>(task), 0x7075787a6c65ULL);
  h = hash_mix(h, static_cast<std::uint64_t>(difficulty));
  h = hash_mix(h, instance_seed);
  for (double f : prompt_features(*this)) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(f));
    std::memcpy(&bits, &f, sizeof(bits));
    h = hash_mix(h, bits);
  }
  return h;
}

PuzzleInstance generate_instance(TaskId task, int difficulty, std::uint64_t seed) {
  switch (task) {
    case TaskId::twentyfour: return gen_twentyfour(difficulty, seed);
    case TaskId::maze: return gen_maze(difficulty, seed);
    case TaskId::sudoku4: return gen_sudoku4(difficulty, seed);
  }
  throw InvalidInput("generate_instance: unknown task");
}

Verdict verify(const PuzzleInstance& instance, const std::vector<int>& answer_tokens) {
  switch (instance.task) {
    case TaskId::twentyfour: return verify_twentyfour(instance, answer_tokens);
    case TaskId::maze: return verify_maze(instance, answer_tokens);
    case TaskId::sudoku4: return verify_sudoku4(instance, answer_tokens);
  }
  throw InvalidInput("verify: unknown task");
}

double reward_from_verdict(const Verdict& verdict) {
  return verdict.kind == Verdict::Kind::correct ? 1.0 : 0.0;
}

PreferenceRubric PreferenceRubric::from_seed(std::uint64_t rubric_seed) {
  CounterRng rng = CounterRng::keyed({rubric_seed, 0x727562726963ULL});
  PreferenceRubric rubric;
  rubric.target_length = 4 + static_cast<int>(rng.next_below(21));  // [4, 24]
  int filled = 0;
  while (filled < 3) {
    const int t = 1 + static_cast<int>(rng.next_below(kAlphabetSize - 1));
    bool dup = false;
    for (int i = 0; i < filled; ++i) dup |= (rubric.required[i] == t);
    if (!dup) rubric.required[filled++] = t;
  }
  return rubric;
}

double PreferenceRubric::score(const std::vector<int>& tokens) const {
  const double len = static_cast<double>(tokens.size());
  double covered = 0.0;
  for (int need : required) {
    for (int t : tokens) {
      if (t == need) {
        covered += 1.0;
        break;
      }
    }
  }
  return -std::abs(len - target_length) / static_cast<double>(target_length) + covered / 3.0;
}

static double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double pairwise_preference(const std::vector<int>& a, const std::vector<int>& b,
                           std::uint64_t rubric_seed) {
  const PreferenceRubric rubric = PreferenceRubric::from_seed(rubric_seed);
  return sigmoid(rubric.score(a) - rubric.score(b));
}

std::uint64_t legal_token_mask(const PuzzleInstance& instance) {
  std::uint64_t mask = token_bit(kTokEnd);
  switch (instance.task) {
    case TaskId::twentyfour: {
      const auto& p = std::get<TwentyFourPayload>(instance.payload);
      for (int n : p.numbers) mask |= token_bit(n);
      mask |= token_bit(kTokPlus) | token_bit(kTokMinus) | token_bit(kTokMul) |
              token_bit(kTokDiv) | token_bit(kTokLParen) | token_bit(kTokRParen);
      break;
    }
    case TaskId::maze:
      mask |= token_bit(kTokUp) | token_bit(kTokDown) | token_bit(kTokLeft) |
              token_bit(kTokRight);
      break;
    case TaskId::sudoku4:
      mask |= token_bit(1) | token_bit(2) | token_bit(3) | token_bit(4);
      break;
  }
  return mask;
}

// Static prompt block layout (kPromptFeatureDims = 232):
//   [0..2] task one-hot, [3] difficulty/5
//   maze (rooms <= 6): [4..33] right-open bits, [34..63] down-open bits,
//     [64..99] start one-hot, [100..135] goal one-hot, [136..137] goal delta
//   twentyfour: [138..150] number counts / n, [151] n/6
//   sudoku4: [152..231] per-cell digit one-hot (0 = blank)
std::vector<double> prompt_features(const PuzzleInstance& instance) {
  std::vector<double> f(kPromptFeatureDims, 0.0);
  f[static_cast<int>(instance.task)] = 1.0;
  f[3] = instance.difficulty / 5.0;
  switch (instance.task) {
    case TaskId::maze: {
      const auto& p = std::get<MazePayload>(instance.payload);
      for (int r = 0; r < p.rooms; ++r)
        for (int c = 0; c + 1 < p.rooms; ++c)
          if (p.right_open(r, c)) f[4 + r * 5 + c] = 1.0;
      for (int r = 0; r + 1 < p.rooms; ++r)
        for (int c = 0; c < p.rooms; ++c)
          if (p.down_open(r, c)) f[34 + r * 6 + c] = 1.0;
      f[64 + p.start_r * 6 + p.start_c] = 1.0;
      f[100 + p.goal_r * 6 + p.goal_c] = 1.0;
      f[136] = static_cast<double>(p.goal_r - p.start_r) / p.rooms;
      f[137] = static_cast<double>(p.goal_c - p.start_c) / p.rooms;
      break;
    }
    case TaskId::twentyfour: {
      const auto& p = std::get<TwentyFourPayload>(instance.payload);
      const double n = static_cast<double>(p.numbers.size());
      for (int v : p.numbers) f[138 + (v - 1)] += 1.0 / n;
      f[151] = n / 6.0;
      break;
    }
    case TaskId::sudoku4: {
      const auto& p = std::get<SudokuPayload>(instance.payload);
      for (int i = 0; i < 16; ++i) f[152 + i * 5 + p.givens[i]] = 1.0;
      break;
    }
  }
  return f;
}

// Dynamic block layout (kDynamicFeatureDims = 48), per task:
//   maze: [0..35] current room one-hot, [36..39] open U/D/L/R, [40..41] goal
//     delta from here, [42] collision flag
//   twentyfour: [0..12] unused number counts / n, [13] paren balance / 6
//   sudoku4: [0..15] next blank one-hot, [16..19] digits placeable there
void dynamic_features(const PuzzleInstance& instance, std::span<const int> prefix,
                      std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(kDynamicFeatureDims))
    throw InvalidInput("dynamic_features: output span size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  switch (instance.task) {
    case TaskId::maze: {
      const auto& p = std::get<MazePayload>(instance.payload);
      int r = p.start_r, c = p.start_c;
      bool crashed = false;
      for (int t : prefix) {
        int nr = r, nc = c;
        switch (t) {
          case kTokUp: --nr; break;
          case kTokDown: ++nr; break;
          case kTokLeft: --nc; break;
          case kTokRight: ++nc; break;
          default: continue;
        }
        const bool inside = nr >= 0 && nr < p.rooms && nc >= 0 && nc < p.rooms;
        const bool open = inside && ((nc == c + 1 && p.right_open(r, c)) ||
                                     (nc == c - 1 && p.right_open(r, nc)) ||
                                     (nr == r + 1 && p.down_open(r, c)) ||
                                     (nr == r - 1 && p.down_open(nr, c)));
        if (!open) {
          crashed = true;
          continue;
        }
        r = nr;
        c = nc;
      }
      out[r * 6 + c] = 1.0;
      if (r > 0 && p.down_open(r - 1, c)) out[36] = 1.0;
      if (r + 1 < p.rooms && p.down_open(r, c)) out[37] = 1.0;
      if (c > 0 && p.right_open(r, c - 1)) out[38] = 1.0;
      if (c + 1 < p.rooms && p.right_open(r, c)) out[39] = 1.0;
      out[40] = static_cast<double>(p.goal_r - r) / p.rooms;
      out[41] = static_cast<double>(p.goal_c - c) / p.rooms;
      out[42] = crashed ? 1.0 : 0.0;
      break;
    }
    case TaskId::twentyfour: {
      const auto& p = std::get<TwentyFourPayload>(instance.payload);
      const double n = static_cast<double>(p.numbers.size());
      std::array<int, 14> remaining{};
      for (int v : p.numbers) remaining[v]++;
      int balance = 0;
      for (int t : prefix) {
        if (is_number_token(t) && remaining[t] > 0) remaining[t]--;
        if (t == kTokLParen) ++balance;
        if (t == kTokRParen) --balance;
      }
      for (int v = 1; v <= 13; ++v) out[v - 1] = remaining[v] / n;
      out[13] = std::clamp(balance, -6, 6) / 6.0;
      break;
    }
    case TaskId::sudoku4: {
      const auto& p = std::get<SudokuPayload>(instance.payload);
      const std::vector<int> blanks = p.blank_positions();
      std::size_t filled = 0;
      std::array<int, 16> grid = p.givens;
      for (int t : prefix) {
        if (t >= 1 && t <= 4 && filled < blanks.size()) grid[blanks[filled++]] = t;
      }
      if (filled < blanks.size()) {
        const int pos = blanks[filled];
        out[pos] = 1.0;
        const int row = pos / 4, col = pos % 4;
        const int box = (pos / 8) * 2 + (pos % 4) / 2;
        for (int digit = 1; digit <= 4; ++digit) {
          bool ok = true;
          for (int i = 0; i < 16 && ok; ++i) {
            if (grid[i] != digit) continue;
            const int ibox = (i / 8) * 2 + (i % 4) / 2;
            if (i / 4 == row || i % 4 == col || ibox == box) ok = false;
          }
          if (ok) out[16 + digit - 1] = 1.0;
        }
      }
      break;
    }
  }
}

double search_space_metric(const PuzzleInstance& instance) {
  switch (instance.task) {
    case TaskId::twentyfour: {
      // Distinct fully parenthesized expressions over n numbers:
      // n! * Catalan(n-1) * 4^(n-1).
      const auto& p = std::get<TwentyFourPayload>(instance.payload);
      const int n = static_cast<int>(p.numbers.size());
      double fact = 1.0, catalan = 1.0, ops = 1.0;
      for (int i = 2; i <= n; ++i) fact *= i;
      for (int i = 0; i < n - 1; ++i) {
        catalan = catalan * 2.0 * (2.0 * i + 1.0) / (i + 2.0);
        ops *= 4.0;
      }
      return fact * catalan * ops;
    }
    case TaskId::maze: {
      // Shortest start->goal distance; equals the generator's target length.
      const auto& p = std::get<MazePayload>(instance.payload);
      std::vector<int> dist(static_cast<std::size_t>(p.rooms) * p.rooms, -1);
      std::vector<int> queue;
      auto idx = [&p](int r, int c) { return r * p.rooms + c; };
      dist[idx(p.start_r, p.start_c)] = 0;
      queue.push_back(idx(p.start_r, p.start_c));
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const int cur = queue[head];
        const int r = cur / p.rooms, c = cur % p.rooms;
        auto visit = [&](int nr, int nc) {
          if (dist[idx(nr, nc)] < 0) {
            dist[idx(nr, nc)] = dist[cur] + 1;
            queue.push_back(idx(nr, nc));
          }
        };
        if (c + 1 < p.rooms && p.right_open(r, c)) visit(r, c + 1);
        if (c > 0 && p.right_open(r, c - 1)) visit(r, c - 1);
        if (r + 1 < p.rooms && p.down_open(r, c)) visit(r + 1, c);
        if (r > 0 && p.down_open(r - 1, c)) visit(r - 1, c);
      }
      return static_cast<double>(dist[idx(p.goal_r, p.goal_c)]);
    }
    case TaskId::sudoku4: {
      const auto& p = std::get<SudokuPayload>(instance.payload);
      return static_cast<double>(p.blank_positions().size());
    }
  }
  return 0.0;
}

std::string instance_to_json_line(const PuzzleInstance& instance) {
  json payload;
  switch (instance.task) {
    case TaskId::twentyfour: {
      const auto& p = std::get<TwentyFourPayload>(instance.payload);
      payload = {{"numbers", p.numbers}, {"target", p.target}};
      break;
    }
    case TaskId::maze: {
      const auto& p = std::get<MazePayload>(instance.payload);
      payload = {{"rooms", p.rooms},
                 {"open_right", p.open_right},
                 {"open_down", p.open_down},
                 {"start", {p.start_r, p.start_c}},
                 {"goal", {p.goal_r, p.goal_c}}};
      break;
    }
    case TaskId::sudoku4: {
      const auto& p = std::get<SudokuPayload>(instance.payload);
      std::string givens(16, '0');
      for (int i = 0; i < 16; ++i) givens[i] = static_cast<char>('0' + p.givens[i]);
      payload = {{"givens", givens}};
      break;
    }
  }
  const json record = {{"task_id", task_name(instance.task)},
                       {"difficulty", instance.difficulty},
                       {"payload", payload},
                       {"reference_solution", detokenize(instance.reference_solution)},
                       {"instance_seed", instance.instance_seed}};
  return record.dump();
}

PuzzleInstance instance_from_json_line(const std::string& line) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad instance record: ") + e.what());
  }
  PuzzleInstance instance;
  try {
    const auto task = parse_task(record.at("task_id").get<std::string>());
    if (!task) throw ConfigError("bad instance record: unknown task_id");
    instance.task = *task;
    instance.difficulty = record.at("difficulty").get<int>();
    instance.instance_seed = record.at("instance_seed").get<std::uint64_t>();
    const auto tokens = tokenize(record.at("reference_solution").get<std::string>());
    if (!tokens) throw ConfigError("bad instance record: unparseable reference_solution");
    instance.reference_solution = *tokens;
    const json& payload = record.at("payload");
    switch (instance.task) {
      case TaskId::twentyfour: {
        TwentyFourPayload p;
        p.numbers = payload.at("numbers").get<std::vector<int>>();
        p.target = payload.at("target").get<int>();
        instance.payload = std::move(p);
        break;
      }
      case TaskId::maze: {
        MazePayload p;
        p.rooms = payload.at("rooms").get<int>();
        p.open_right = payload.at("open_right").get<std::vector<std::string>>();
        p.open_down = payload.at("open_down").get<std::vector<std::string>>();
        p.start_r = payload.at("start").at(0).get<int>();
        p.start_c = payload.at("start").at(1).get<int>();
        p.goal_r = payload.at("goal").at(0).get<int>();
        p.goal_c = payload.at("goal").at(1).get<int>();
        instance.payload = std::move(p);
        break;
      }
      case TaskId::sudoku4: {
        SudokuPayload p;
        const std::string givens = payload.at("givens").get<std::string>();
        if (givens.size() != 16) throw ConfigError("bad instance record: givens must be 16 chars");
        for (int i = 0; i < 16; ++i) {
          if (givens[i] < '0' || givens[i] > '4')
            throw ConfigError("bad instance record: givens digits must be 0..4");
          p.givens[i] = givens[i] - '0';
        }
        instance.payload = p;
        break;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad instance record: ") + e.what());
  }
  return instance;
}

}  // namespace deskrl
