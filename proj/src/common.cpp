#include "icoding/common.hpp"

#include <numeric>

namespace icoding {

namespace {

Rate reduced(__int128 n, __int128 d) {
  if (d == 0) throw std::invalid_argument("rate with zero denominator");
  if (d < 0) { n = -n; d = -d; }
  __int128 a = n < 0 ? -n : n, b = d;
  while (b != 0) { __int128 t = a % b; a = b; b = t; }
  if (a == 0) a = 1;
  n /= a;
  d /= a;
  if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) throw std::overflow_error("rate overflow");
  Rate r;
  r.num = static_cast<int64_t>(n);
  r.den = static_cast<int64_t>(d);
  return r;
}

int64_t parse_int(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty number");
  int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad digit in number: " + std::string(s));
    v = v * 10 + (c - '0');
    if (v > (int64_t{1} << 50)) throw std::invalid_argument("number too large: " + std::string(s));
  }
  return v;
}

}  // namespace

Rate::Rate(int64_t n, int64_t d) { *this = reduced(n, d); }

Rate Rate::parse(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty rate");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rate(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 12) throw std::invalid_argument("too many decimals in rate");
    int64_t den = 1;
    for (size_t i = 0; i < frac.size(); ++i) den *= 10;
    int64_t w = whole.empty() ? 0 : parse_int(whole);
    int64_t f = frac.empty() ? 0 : parse_int(frac);
    return Rate(w * den + f, den);
  }
  return Rate(parse_int(text), 1);
}

uint64_t Rate::budget(uint64_t rounds) const {
  if (num <= 0) return 0;
  __int128 v = static_cast<__int128>(num) * rounds / den;
  return static_cast<uint64_t>(v);
}

bool Rate::admits(uint64_t count, uint64_t rounds) const {
  return static_cast<__int128>(count) * den <= static_cast<__int128>(num) * rounds;
}

std::string Rate::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Rate operator-(const Rate& a, const Rate& b) {
  return reduced(static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den,
                 static_cast<__int128>(a.den) * b.den);
}

Rate operator+(const Rate& a, const Rate& b) {
  return reduced(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                 static_cast<__int128>(a.den) * b.den);
}

Rate operator*(const Rate& a, const Rate& b) {
  return reduced(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
}

bool operator<(const Rate& a, const Rate& b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

std::string bits_to_string(const Bits& bits) {
  std::string s(bits.size(), '0');
  for (size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
  return s;
}

Bits bits_from_string(std::string_view text) {
  Bits b;
  b.reserve(text.size());
  for (char c : text) {
    if (c == '0') b.push_back(0);
    else if (c == '1') b.push_back(1);
    else throw std::invalid_argument("bit string contains non-binary character");
  }
  return b;
}

uint32_t ceil_log2(uint64_t x) {
  uint32_t r = 0;
  while ((uint64_t{1} << r) < x && r < 63) ++r;
  return r;
}

}  // namespace icoding
