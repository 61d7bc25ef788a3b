#include <numeric>
#include <optional>

#include "deskrl/common.hpp"
#include "deskrl/envs.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {
namespace {

// Exact rational value. Magnitudes stay small: at most six inputs in 1..13
// combined by one operator each, so int64 never overflows after reduction.
struct Rat {
  long long num = 0;
  long long den = 1;

  static Rat of(long long v) { return Rat{v, 1}; }

  void reduce() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  bool operator==(const Rat& o) const { return num == o.num && den == o.den; }
};

Rat add(Rat a, Rat b) {
  Rat r{a.num * b.den + b.num * a.den, a.den * b.den};
  r.reduce();
  return r;
}
Rat sub(Rat a, Rat b) {
  Rat r{a.num * b.den - b.num * a.den, a.den * b.den};
  r.reduce();
  return r;
}
Rat mul(Rat a, Rat b) {
  Rat r{a.num * b.num, a.den * b.den};
  r.reduce();
  return r;
}
std::optional<Rat> div(Rat a, Rat b) {
  if (b.num == 0) return std::nullopt;
  Rat r{a.num * b.den, a.den * b.num};
  r.reduce();
  return r;
}

struct Item {
  Rat value;
  std::vector<int> expr;  // token form, fully parenthesized
};

std::vector<int> wrap(const std::vector<int>& a, int op, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size() + 3);
  out.push_back(kTokLParen);
  out.insert(out.end(), a.begin(), a.end());
  out.push_back(op);
  out.insert(out.end(), b.begin(), b.end());
  out.push_back(kTokRParen);
  return out;
}

// Exhaustive pairwise-combination search; returns the first expression that
// reaches the target. Deterministic given the input order.
bool solve(std::vector<Item>& items, const Rat& target, std::vector<int>* solution) {
  if (items.size() == 1) {
    if (items[0].value == target) {
      if (solution != nullptr) *solution = items[0].expr;
      return true;
    }
    return false;
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const Item a = items[i];
      const Item b = items[j];
      std::vector<Item> rest;
      rest.reserve(items.size() - 1);
      for (std::size_t k = 0; k < items.size(); ++k)
        if (k != i && k != j) rest.push_back(items[k]);

      struct Candidate {
        std::optional<Rat> value;
        std::vector<int> expr;
      };
      const Candidate candidates[] = {
          {add(a.value, b.value), wrap(a.expr, kTokPlus, b.expr)},
          {sub(a.value, b.value), wrap(a.expr, kTokMinus, b.expr)},
          {sub(b.value, a.value), wrap(b.expr, kTokMinus, a.expr)},
          {mul(a.value, b.value), wrap(a.expr, kTokMul, b.expr)},
          {div(a.value, b.value), wrap(a.expr, kTokDiv, b.expr)},
          {div(b.value, a.value), wrap(b.expr, kTokDiv, a.expr)},
      };
      for (const Candidate& c : candidates) {
        if (!c.value) continue;
        rest.push_back(Item{*c.value, c.expr});
        if (solve(rest, target, solution)) return true;
        rest.pop_back();
      }
    }
  }
  return false;
}

// Recursive-descent parser over tokens. Returns nullopt on syntax errors.
// Division by zero yields a parse success with an undefined value flag.
struct Parser {
  const std::vector<int>& tokens;
  std::size_t pos = 0;
  std::vector<int> used_numbers;
  bool divide_by_zero = false;

  explicit Parser(const std::vector<int>& t) : tokens(t) {}

  bool done() const { return pos >= tokens.size(); }
  int peek() const { return done() ? -1 : tokens[pos]; }

  std::optional<Rat> parse_factor() {
    if (done()) return std::nullopt;
    const int t = tokens[pos];
    if (is_number_token(t)) {
      ++pos;
      used_numbers.push_back(t);
      return Rat::of(t);
    }
    if (t == kTokLParen) {
      ++pos;
      auto inner = parse_expr();
      if (!inner || peek() != kTokRParen) return std::nullopt;
      ++pos;
      return inner;
    }
    return std::nullopt;
  }

  std::optional<Rat> parse_term() {
    auto left = parse_factor();
    if (!left) return std::nullopt;
    while (peek() == kTokMul || peek() == kTokDiv) {
      const int op = tokens[pos++];
      auto right = parse_factor();
      if (!right) return std::nullopt;
      if (op == kTokMul) {
        left = mul(*left, *right);
      } else {
        auto q = div(*left, *right);
        if (!q) {
          divide_by_zero = true;
          q = Rat::of(0);
        }
        left = q;
      }
    }
    return left;
  }

  std::optional<Rat> parse_expr() {
    auto left = parse_term();
    if (!left) return std::nullopt;
    while (peek() == kTokPlus || peek() == kTokMinus) {
      const int op = tokens[pos++];
      auto right = parse_term();
      if (!right) return std::nullopt;
      left = op == kTokPlus ? add(*left, *right) : sub(*left, *right);
    }
    return left;
  }
};

}  // namespace

PuzzleInstance gen_twentyfour(int difficulty, std::uint64_t seed) {
  if (difficulty < 1 || difficulty > 5) throw InvalidInput("gen_twentyfour: difficulty in 1..5");
  const int n = difficulty + 1;
  CounterRng rng = CounterRng::keyed({seed, 24, static_cast<std::uint64_t>(difficulty)});
  PuzzleInstance instance;
  instance.task = TaskId::twentyfour;
  instance.difficulty = difficulty;
  instance.instance_seed = seed;
  while (true) {
    TwentyFourPayload payload;
    payload.numbers.clear();
    for (int i = 0; i < n; ++i) payload.numbers.push_back(rng.uniform_int(1, 13));
    std::vector<Item> items;
    for (int v : payload.numbers) items.push_back(Item{Rat::of(v), {v}});
    std::vector<int> solution;
    if (solve(items, Rat::of(payload.target), &solution)) {
      instance.payload = std::move(payload);
      instance.reference_solution = std::move(solution);
      return instance;
    }
  }
}

Verdict verify_twentyfour(const PuzzleInstance& instance, const std::vector<int>& answer_tokens) {
  const auto& payload = std::get<TwentyFourPayload>(instance.payload);
  for (int t : answer_tokens) {
    const bool known = is_number_token(t) || t == kTokPlus || t == kTokMinus || t == kTokMul ||
                       t == kTokDiv || t == kTokLParen || t == kTokRParen;
    if (!known) return {Verdict::Kind::malformed, "token outside expression alphabet"};
  }
  Parser parser(answer_tokens);
  auto value = parser.parse_expr();
  if (!value || !parser.done()) return {Verdict::Kind::malformed, "unparseable expression"};

  std::vector<int> want = payload.numbers;
  std::vector<int> got = parser.used_numbers;
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  if (want != got) return {Verdict::Kind::malformed, "numbers used do not match the instance"};

  if (parser.divide_by_zero) return {Verdict::Kind::incorrect, "division by zero"};
  if (*value == Rat::of(payload.target)) return {Verdict::Kind::correct, "evaluates to target"};
  return {Verdict::Kind::incorrect, "expression does not reach the target"};
}

}  // namespace deskrl
