#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace icoding {

using Bits = std::vector<uint8_t>;

enum class Party : uint8_t { Alice = 0, Bob = 1 };

constexpr Party other(Party p) { return p == Party::Alice ? Party::Bob : Party::Alice; }
constexpr int index_of(Party p) { return static_cast<int>(p); }

// Alice decides at even depths (the root is depth 0), Bob at odd depths.
constexpr Party owner_of_depth(uint64_t depth) { return depth % 2 == 0 ? Party::Alice : Party::Bob; }

constexpr uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr uint64_t mix2(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ull)); }

// Exact non-negative rational used for error rates and tolerances.
struct Rate {
  int64_t num = 0;
  int64_t den = 1;

  Rate() = default;
  Rate(int64_t n, int64_t d);

  static Rate parse(std::string_view text);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  // floor(rate * rounds)
  uint64_t budget(uint64_t rounds) const;
  // true iff count / rounds <= rate
  bool admits(uint64_t count, uint64_t rounds) const;
  std::string str() const;

  friend Rate operator-(const Rate& a, const Rate& b);
  friend Rate operator+(const Rate& a, const Rate& b);
  friend Rate operator*(const Rate& a, const Rate& b);
  friend bool operator==(const Rate& a, const Rate& b) { return a.num == b.num && a.den == b.den; }
  friend bool operator<(const Rate& a, const Rate& b);
  friend bool operator<=(const Rate& a, const Rate& b) { return !(b < a); }
};

std::string bits_to_string(const Bits& bits);
Bits bits_from_string(std::string_view text);

// ceil(log2(x)) for x >= 1
uint32_t ceil_log2(uint64_t x);

}  // namespace icoding
