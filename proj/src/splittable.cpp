#include "icoding/splittable.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "icoding/ecc.hpp"

namespace icoding {

namespace {

template <uint32_t Bits_, uint32_t Poly>
struct BinaryField {
  static constexpr uint32_t kSize = 1u << Bits_;
  std::vector<uint16_t> exp, log;

  BinaryField() : exp(2 * kSize), log(kSize) {
    uint32_t x = 1;
    for (uint32_t i = 0; i < kSize - 1; ++i) {
      exp[i] = static_cast<uint16_t>(x);
      log[x] = static_cast<uint16_t>(i);
      x <<= 1;
      if (x & kSize) x ^= Poly;
    }
    for (uint32_t i = kSize - 1; i < 2 * kSize; ++i) exp[i] = exp[i - (kSize - 1)];
  }

  uint16_t mul(uint16_t a, uint16_t b) const {
    if (a == 0 || b == 0) return 0;
    return exp[static_cast<uint32_t>(log[a]) + log[b]];
  }
};

const BinaryField<8, 0x11D>& gf256() {
  static const BinaryField<8, 0x11D> f;
  return f;
}

const BinaryField<16, 0x1100B>& gf65536() {
  static const BinaryField<16, 0x1100B> f;
  return f;
}

template <typename F>
void rs_half_rate(const F& f, const std::vector<uint16_t>& msg, uint16_t* out, uint64_t& work) {
  const size_t k = msg.size(), n = 2 * k;
  for (size_t x = 0; x < n; ++x) {
    uint16_t acc = 0;
    for (size_t j = k; j-- > 0;) acc = static_cast<uint16_t>(f.mul(acc, static_cast<uint16_t>(x)) ^ msg[j]);
    out[x] = acc;
  }
  work += n * k;
}

}  // namespace

uint32_t level_code_length(uint64_t block_bits) {
  if (block_bits < 16) return 3;
  if (block_bits <= 1024) return static_cast<uint32_t>(block_bits / 4);
  if (block_bits <= (1u << 19)) return static_cast<uint32_t>(block_bits / 8);
  throw std::length_error("level block too long");
}

void level_encode(const uint8_t* bits, uint64_t block_bits, uint16_t* out, uint64_t& work) {
  if (block_bits < 16) {
    uint16_t v = 0;
    for (uint64_t t = 0; t < block_bits; ++t) v = static_cast<uint16_t>(v | (bits[t] << t));
    out[0] = out[1] = out[2] = v;
    work += 3;
    return;
  }
  const uint32_t width = block_bits <= 1024 ? 8 : 16;
  std::vector<uint16_t> msg(block_bits / width, 0);
  for (uint64_t t = 0; t < block_bits; ++t) msg[t / width] = static_cast<uint16_t>(msg[t / width] | (bits[t] << (t % width)));
  if (width == 8) rs_half_rate(gf256(), msg, out, work);
  else rs_half_rate(gf65536(), msg, out, work);
}

uint32_t split_levels(uint64_t len) {
  if (len == 0) return 0;
  return std::max<uint32_t>(1, ceil_log2(len));
}

bool is_break_point(uint64_t j, uint64_t offset, uint32_t level) {
  if (level == 0) throw std::invalid_argument("levels start at 1");
  return (j + offset) % (uint64_t{1} << (level - 1)) == 0;
}

SplittableEncoding::SplittableEncoding(const Bits& s, uint64_t offset) : offset_(offset), length_(s.size()) {
  const uint32_t L = split_levels(s.size());
  levels_.resize(L);
  for (uint32_t i = 1; i <= L; ++i) {
    Level& lv = levels_[i - 1];
    lv.block_bits = uint64_t{1} << (i - 1);
    lv.code_len = level_code_length(lv.block_bits);
    const uint64_t B = lv.block_bits;
    lv.first_end = (offset + B + B - 1) / B * B;
    const uint64_t last_end = (offset + length_) / B * B;
    lv.count = last_end >= lv.first_end ? (last_end - lv.first_end) / B + 1 : 0;
    lv.symbols.resize(lv.count * lv.code_len);
    for (uint64_t b = 0; b < lv.count; ++b) {
      const uint64_t start = lv.first_end + b * B - B - offset;  // 0-based index into s
      level_encode(s.data() + start, B, lv.symbols.data() + b * lv.code_len, work_);
    }
  }
}

std::span<const uint16_t> SplittableEncoding::codeword(uint32_t i, uint64_t end) const {
  const Level& lv = level(i);
  if (end < lv.first_end || (end - lv.first_end) % lv.block_bits != 0) throw std::out_of_range("unaligned block");
  const uint64_t b = (end - lv.first_end) / lv.block_bits;
  if (b >= lv.count) throw std::out_of_range("block outside the encoding");
  return {lv.symbols.data() + b * lv.code_len, lv.code_len};
}

uint64_t SplittableEncoding::symbol_count() const {
  uint64_t t = 0;
  for (const auto& lv : levels_) t += lv.symbols.size();
  return t;
}

SplittableView::SplittableView(const SplittableEncoding* enc, uint64_t i, uint64_t j) : enc_(enc) {
  if (i == 0 || i > j + 1 || j > enc->length()) throw std::out_of_range("sub-encoding range outside the string");
  offset_ = enc->offset() + i - 1;
  length_ = j + 1 - i;
}

std::vector<uint64_t> SplittableView::block_ends(uint32_t i) const {
  std::vector<uint64_t> out;
  if (i == 0 || i > levels()) return out;
  const uint64_t B = uint64_t{1} << (i - 1);
  for (uint64_t e = (offset_ + B + B - 1) / B * B; e <= offset_ + length_; e += B) out.push_back(e);
  return out;
}

SplittableView extract_sub(const SplittableEncoding& enc, uint64_t i, uint64_t j) {
  return SplittableView(&enc, i, j);
}

namespace {

struct Side {
  const Covering& views;
  size_t at = 0;
  std::vector<uint16_t> samples;
};

void check_covering(const Covering& c) {
  for (size_t t = 1; t < c.size(); ++t)
    if (c[t].offset() != c[t - 1].offset() + c[t - 1].length())
      throw std::invalid_argument("covering views are not consecutive");
}

uint64_t covering_end(const Covering& c) { return c.empty() ? 0 : c.back().offset() + c.back().length(); }

std::vector<uint64_t> hash_samples(const std::vector<uint16_t>& v, uint32_t out_bits, uint64_t seed) {
  const PrimeField f{kMersenne61};
  std::vector<uint64_t> out;
  for (uint32_t t = 0; t * 60 < out_bits; ++t) {
    const uint64_t r = hash_point(seed, t);
    uint64_t acc = v.size() + 1, pw = 1;
    for (uint16_t s : v) {
      pw = f.mul(pw, r);
      acc = f.add(acc, f.mul(uint64_t{s} + 1, pw));
    }
    const uint32_t keep = std::min<uint32_t>(60, out_bits - t * 60);
    out.push_back(acc & ((uint64_t{1} << keep) - 1));
  }
  return out;
}

}  // namespace

EqualityOutcome path_equal_fast(const Covering& a, const Covering& b, uint32_t samples, uint32_t log_n,
                                uint64_t seed) {
  check_covering(a);
  check_covering(b);
  EqualityOutcome res;
  const uint64_t a0 = a.empty() ? 0 : a.front().offset(), b0 = b.empty() ? 0 : b.front().offset();
  const uint64_t a1 = covering_end(a), b1 = covering_end(b);
  if (a1 - a0 != b1 - b0 || (a1 > a0 && a0 != b0)) throw std::invalid_argument("coverings of different strings");
  std::vector<uint64_t> cuts;
  for (size_t t = 1; t < a.size(); ++t) cuts.push_back(a[t].offset());
  for (size_t t = 1; t < b.size(); ++t) cuts.push_back(b[t].offset());
  const uint32_t hash_bits = 2 * samples;
  res.bits = cuts.size() * log_n + hash_bits + 1;
  if (a1 == a0) return res;
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(a1);

  Side sa{a}, sb{b};
  uint64_t lo = a0;
  for (uint64_t hi : cuts) {
    if (hi == lo) continue;
    ++res.cells;
    for (Side* s : {&sa, &sb}) {
      while (s->views[s->at].offset() + s->views[s->at].length() < hi || s->views[s->at].length() == 0) ++s->at;
    }
    const uint64_t max_block = uint64_t{1} << (split_levels(hi - lo) - 1);
    uint64_t p = lo;
    while (p < hi) {
      uint64_t B = max_block;
      while (p % B != 0 || p + B > hi) B >>= 1;
      const uint32_t level = ceil_log2(B) + 1;
      const uint64_t end = p + B;
      const uint32_t len = level_code_length(B);
      for (uint32_t t = 0; t < samples; ++t) {
        const uint64_t pos = mix2(seed, mix2(end * 64 + level, t)) % len;
        sa.samples.push_back(sa.views[sa.at].codeword(level, end)[pos]);
        sb.samples.push_back(sb.views[sb.at].codeword(level, end)[pos]);
      }
      res.work += 2 + 2ull * samples;
      p = end;
    }
    lo = hi;
  }
  const uint64_t hseed = mix2(seed, 0x5A5A);
  res.equal = hash_samples(sa.samples, hash_bits, hseed) == hash_samples(sb.samples, hash_bits, hseed);
  return res;
}

}  // namespace icoding
