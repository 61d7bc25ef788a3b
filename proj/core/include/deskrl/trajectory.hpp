#pragma once

#include <cstdint>
#include <vector>

namespace deskrl {

// One generated token sequence. Behavior log-probabilities and snapshot
// versions are stamped per token at generation time; values, advantages and
// value targets are training-time slots filled against the current policy.
struct Trajectory {
  std::uint64_t prompt_uid = 0;
  std::uint64_t attempt = 0;
  std::vector<int> tokens;
  std::vector<double> behavior_logprobs;
  std::vector<int> snapshot_versions;
  bool truncated = false;  // hit max length without emitting <end>
  double reward = 0.0;

  std::vector<double> values;
  std::vector<double> advantages;
  std::vector<double> value_targets;

  std::size_t length() const { return tokens.size(); }

  // Tokens as seen by a verifier: the trailing <end> stripped.
  std::vector<int> answer_tokens() const {
    std::vector<int> out = tokens;
    if (!out.empty() && out.back() == 0) out.pop_back();
    return out;
  }

  int min_version() const {
    int v = snapshot_versions.empty() ? 0 : snapshot_versions.front();
    for (int s : snapshot_versions) v = s < v ? s : v;
    return v;
  }
  int max_version() const {
    int v = snapshot_versions.empty() ? 0 : snapshot_versions.front();
    for (int s : snapshot_versions) v = s > v ? s : v;
    return v;
  }
};

}  // namespace deskrl
