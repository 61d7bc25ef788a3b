#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deskrl {

// Shared token alphabet across all tasks. Numbers 1..13 map to ids 1..13
// (sudoku digits reuse ids 1..4), then arithmetic operators and maze moves.
enum Token : int {
  kTokEnd = 0,
  // ids 1..13 are the number tokens "1".."13"
  kTokPlus = 14,
  kTokMinus = 15,
  kTokMul = 16,
  kTokDiv = 17,
  kTokLParen = 18,
  kTokRParen = 19,
  kTokUp = 20,
  kTokDown = 21,
  kTokLeft = 22,
  kTokRight = 23,
};

inline constexpr int kAlphabetSize = 24;

inline bool is_number_token(int t) { return t >= 1 && t <= 13; }

// Printable form of one token ("<end>" for the terminator).
std::string token_text(int token);

// Canonical text of a token sequence: single-space separated, <end> omitted.
std::string detokenize(const std::vector<int>& tokens);

// Parses answer text into tokens. Whitespace separates tokens but is
// optional where splits are unambiguous ("4*6" and "4 * 6" both work);
// digit runs are greedy, so "12" is the single token 12, never 1 then 2.
// Returns nullopt on any character or number outside the alphabet.
std::optional<std::vector<int>> tokenize(std::string_view text);

// Token-set masks (bit i set = token i allowed).
inline constexpr std::uint64_t token_bit(int t) { return 1ULL << t; }

}  // namespace deskrl
