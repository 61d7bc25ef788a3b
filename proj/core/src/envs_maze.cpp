#include <algorithm>

#include "deskrl/common.hpp"
#include "deskrl/envs.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {
namespace {

struct RoomGraph {
  int rooms = 0;
  std::vector<std::string> open_right, open_down;

  int index(int r, int c) const { return r * rooms + c; }

  std::vector<int> neighbors(int cell) const {
    const int r = cell / rooms, c = cell % rooms;
    std::vector<int> out;
    if (c + 1 < rooms && open_right[r][c] == '1') out.push_back(index(r, c + 1));
    if (c > 0 && open_right[r][c - 1] == '1') out.push_back(index(r, c - 1));
    if (r + 1 < rooms && open_down[r][c] == '1') out.push_back(index(r + 1, c));
    if (r > 0 && open_down[r - 1][c] == '1') out.push_back(index(r - 1, c));
    return out;
  }
};

// BFS distances plus parents, for diameter-path extraction.
void bfs(const RoomGraph& g, int from, std::vector<int>& dist, std::vector<int>& parent) {
  dist.assign(static_cast<std::size_t>(g.rooms) * g.rooms, -1);
  parent.assign(dist.size(), -1);
  std::vector<int> queue{from};
  dist[from] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int cur = queue[head];
    for (int next : g.neighbors(cur)) {
      if (dist[next] < 0) {
        dist[next] = dist[cur] + 1;
        parent[next] = cur;
        queue.push_back(next);
      }
    }
  }
}

// Recursive-backtracker carve: a uniform spanning tree is not needed, long
// corridors are (they keep the diameter comfortably above the target).
RoomGraph carve(int rooms, CounterRng& rng) {
  RoomGraph g;
  g.rooms = rooms;
  g.open_right.assign(rooms, std::string(std::max(0, rooms - 1), '0'));
  g.open_down.assign(std::max(0, rooms - 1), std::string(rooms, '0'));

  std::vector<bool> visited(static_cast<std::size_t>(rooms) * rooms, false);
  std::vector<int> stack{static_cast<int>(rng.next_below(visited.size()))};
  visited[stack.back()] = true;
  while (!stack.empty()) {
    const int cur = stack.back();
    const int r = cur / rooms, c = cur % rooms;
    int options[4];
    int n_options = 0;
    if (c + 1 < rooms && !visited[g.index(r, c + 1)]) options[n_options++] = 0;
    if (c > 0 && !visited[g.index(r, c - 1)]) options[n_options++] = 1;
    if (r + 1 < rooms && !visited[g.index(r + 1, c)]) options[n_options++] = 2;
    if (r > 0 && !visited[g.index(r - 1, c)]) options[n_options++] = 3;
    if (n_options == 0) {
      stack.pop_back();
      continue;
    }
    switch (options[rng.next_below(static_cast<std::uint64_t>(n_options))]) {
      case 0:
        g.open_right[r][c] = '1';
        visited[g.index(r, c + 1)] = true;
        stack.push_back(g.index(r, c + 1));
        break;
      case 1:
        g.open_right[r][c - 1] = '1';
        visited[g.index(r, c - 1)] = true;
        stack.push_back(g.index(r, c - 1));
        break;
      case 2:
        g.open_down[r][c] = '1';
        visited[g.index(r + 1, c)] = true;
        stack.push_back(g.index(r + 1, c));
        break;
      case 3:
        g.open_down[r - 1][c] = '1';
        visited[g.index(r - 1, c)] = true;
        stack.push_back(g.index(r - 1, c));
        break;
    }
  }
  return g;
}

int move_token(int from, int to, int rooms) {
  const int dr = to / rooms - from / rooms;
  const int dc = to % rooms - from % rooms;
  if (dr == -1) return kTokUp;
  if (dr == 1) return kTokDown;
  if (dc == -1) return kTokLeft;
  return kTokRight;
}

}  // namespace

PuzzleInstance gen_maze(int difficulty, std::uint64_t seed) {
  if (difficulty < 1 || difficulty > 5) throw InvalidInput("gen_maze: difficulty in 1..5");
  const int rooms = difficulty + 1;
  const int target_len = 2 * difficulty + 1;
  CounterRng rng = CounterRng::keyed({seed, 0x6d617a65ULL, static_cast<std::uint64_t>(difficulty)});

  for (int attempt = 0;; ++attempt) {
    RoomGraph g = carve(rooms, rng);
    std::vector<int> dist, parent;
    bfs(g, 0, dist, parent);
    const int far_a = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    bfs(g, far_a, dist, parent);
    const int far_b = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    const int diameter = dist[far_b];

    // A subpath of the diameter path realizes any length up to the diameter.
    const int path_len = diameter >= target_len || attempt >= 256 ? std::min(target_len, diameter)
                                                                  : -1;
    if (path_len < 1) continue;

    std::vector<int> path;
    for (int cur = far_b; cur != -1; cur = parent[cur]) path.push_back(cur);
    std::reverse(path.begin(), path.end());  // far_a .. far_b

    const int offset = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(
        static_cast<int>(path.size()) - path_len)));

    PuzzleInstance instance;
    instance.task = TaskId::maze;
    instance.difficulty = difficulty;
    instance.instance_seed = seed;
    MazePayload payload;
    payload.rooms = rooms;
    payload.open_right = g.open_right;
    payload.open_down = g.open_down;
    payload.start_r = path[offset] / rooms;
    payload.start_c = path[offset] % rooms;
    payload.goal_r = path[offset + path_len] / rooms;
    payload.goal_c = path[offset + path_len] % rooms;
    for (int i = offset; i < offset + path_len; ++i)
      instance.reference_solution.push_back(move_token(path[i], path[i + 1], rooms));
    instance.payload = std::move(payload);
    return instance;
  }
}

Verdict verify_maze(const PuzzleInstance& instance, const std::vector<int>& answer_tokens) {
  const auto& payload = std::get<MazePayload>(instance.payload);
  int r = payload.start_r, c = payload.start_c;
  for (int t : answer_tokens) {
    int nr = r, nc = c;
    switch (t) {
      case kTokUp: --nr; break;
      case kTokDown: ++nr; break;
      case kTokLeft: --nc; break;
      case kTokRight: ++nc; break;
      default: return {Verdict::Kind::malformed, "unknown move token"};
    }
    if (nr < 0 || nr >= payload.rooms || nc < 0 || nc >= payload.rooms)
      return {Verdict::Kind::incorrect, "wall collision (grid boundary)"};
    const bool open = (nc == c + 1 && payload.right_open(r, c)) ||
                      (nc == c - 1 && payload.right_open(r, nc)) ||
                      (nr == r + 1 && payload.down_open(r, c)) ||
                      (nr == r - 1 && payload.down_open(nr, c));
    if (!open) return {Verdict::Kind::incorrect, "wall collision"};
    r = nr;
    c = nc;
  }
  if (r == payload.goal_r && c == payload.goal_c)
    return {Verdict::Kind::correct, "path reaches the goal"};
  return {Verdict::Kind::incorrect, "path does not end at the goal"};
}

}  // namespace deskrl
