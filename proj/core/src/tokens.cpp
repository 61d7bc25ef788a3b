#include "deskrl/tokens.hpp"

#include <cctype>

namespace deskrl {

std::string token_text(int token) {
  if (is_number_token(token)) return std::to_string(token);
  switch (token) {
    case kTokEnd: return "<end>";
    case kTokPlus: return "+";
    case kTokMinus: return "-";
    case kTokMul: return "*";
    case kTokDiv: return "/";
    case kTokLParen: return "(";
    case kTokRParen: return ")";
    case kTokUp: return "U";
    case kTokDown: return "D";
    case kTokLeft: return "L";
    case kTokRight: return "R";
    default: return "?";
  }
}

std::string detokenize(const std::vector<int>& tokens) {
  std::string out;
  for (int t : tokens) {
    if (t == kTokEnd) continue;
    if (!out.empty()) out += ' ';
    out += token_text(t);
  }
  return out;
}

std::optional<std::vector<int>> tokenize(std::string_view text) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      int value = 0;
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
        value = value * 10 + (text[j] - '0');
        if (value > 13) return std::nullopt;
        ++j;
      }
      if (value < 1) return std::nullopt;
      out.push_back(value);
      i = j;
      continue;
    }
    switch (c) {
      case '+': out.push_back(kTokPlus); break;
      case '-': out.push_back(kTokMinus); break;
      case '*': out.push_back(kTokMul); break;
      case '/': out.push_back(kTokDiv); break;
      case '(': out.push_back(kTokLParen); break;
      case ')': out.push_back(kTokRParen); break;
      case 'U': out.push_back(kTokUp); break;
      case 'D': out.push_back(kTokDown); break;
      case 'L': out.push_back(kTokLeft); break;
      case 'R': out.push_back(kTokRight); break;
      default: return std::nullopt;
    }
    ++i;
  }
  return out;
}

}  // namespace deskrl
