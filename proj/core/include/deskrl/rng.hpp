#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace deskrl {

// SplitMix64 finalizer. Bijective, well mixed, platform independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Counter-based deterministic generator. A stream is identified by a key
// (folded from arbitrary parts); draw i of a stream depends only on
// (key, i), so parallel rollouts and resumed generations stay reproducible.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng keyed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t k = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t p : parts) k = hash_mix(k, p);
    return CounterRng(k);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

  // Stateless access: draw at an explicit counter position.
  std::uint64_t u64_at(std::uint64_t i) const { return splitmix64(key_ ^ (i * 0xd1342543de82ef95ULL)); }
  double unit_at(std::uint64_t i) const { return to_unit(u64_at(i)); }

  std::uint64_t next_u64() { return u64_at(counter_++); }

  // Uniform in [0, 1).
  double next_unit() { return to_unit(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Inclusive range.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller on two counter draws.
  double next_normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  static double to_unit(std::uint64_t v) { return static_cast<double>(v >> 11) * 0x1.0p-53; }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace deskrl
