#pragma once

#include <optional>
#include <memory>
#include <vector>

#include "icoding/common.hpp"

namespace icoding {

// Arithmetic modulo a prime below 2^63.
struct PrimeField {
  uint64_t p;

  uint64_t add(uint64_t a, uint64_t b) const {
    uint64_t s = a + b;
    return s >= p ? s - p : s;
  }
  uint64_t sub(uint64_t a, uint64_t b) const { return a >= b ? a - b : a + p - b; }
  uint64_t mul(uint64_t a, uint64_t b) const {
    const unsigned __int128 x = static_cast<unsigned __int128>(a) * b;
    if (p == (uint64_t{1} << 61) - 1) {
      const uint64_t r = static_cast<uint64_t>(x & p) + static_cast<uint64_t>(x >> 61);
      return r >= p ? r - p : r;
    }
    return static_cast<uint64_t>(x % p);
  }
  uint64_t pow(uint64_t a, uint64_t e) const;
  uint64_t inv(uint64_t a) const;
};

constexpr uint64_t kMersenne61 = (uint64_t{1} << 61) - 1;

bool is_prime(uint64_t q);

struct RsCode {
  uint64_t q = 0;
  uint32_t k = 0;
  uint32_t n_c = 0;

  void validate() const;
  uint32_t radius() const { return (n_c - k) / 2; }
  uint32_t min_distance() const { return n_c - k + 1; }
};

struct RsDecoded {
  std::vector<uint64_t> message;
  uint32_t distance = 0;
};

// Evaluations of the message polynomial at 0..N_c-1.
std::vector<uint64_t> rs_encode(const std::vector<uint64_t>& message, const RsCode& code);
// Berlekamp-Welch decoding inside the unique-decoding radius. Symbols >= q
// are treated as erasure markers that disagree with every codeword.
std::optional<RsDecoded> rs_unique_decode(const std::vector<uint64_t>& word, const RsCode& code);
// Brute force over all q^k messages; requires q^k <= 2^20.
std::vector<RsDecoded> rs_nearest_list(const std::vector<uint64_t>& word, const RsCode& code, size_t L);

uint32_t hamming(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);

// Polynomial through (xs[i], ys[i]) of degree < xs.size(), coefficients low first.
std::vector<uint64_t> interpolate(const PrimeField& f, const std::vector<uint64_t>& xs,
                                  const std::vector<uint64_t>& ys);
uint64_t poly_eval(const PrimeField& f, const std::vector<uint64_t>& coeffs, uint64_t x);

// m parallel Reed-Solomon codewords over GF(2^61 - 1) sharing evaluation
// points; one channel symbol carries one position of every component.
// Words are laid out position-major: word[pos * m + comp].
class InterleavedRs {
 public:
  static constexpr uint32_t kBitsPerElement = 60;

  InterleavedRs(uint32_t k, uint32_t n_c, uint32_t m, uint64_t combo_seed = 0x1C0D1C0Dull);

  uint32_t k() const { return k_; }
  uint32_t n_c() const { return n_c_; }
  uint32_t m() const { return m_; }
  uint32_t radius() const { return (n_c_ - k_) / 2; }
  size_t payload_bits() const { return static_cast<size_t>(k_) * m_ * kBitsPerElement; }
  // Components needed to carry |bits| payload bits with message length k.
  static uint32_t components_for(size_t bits, uint32_t k);

  // message layout: message[comp * k + j] is coefficient j of component comp.
  std::vector<uint64_t> encode(const std::vector<uint64_t>& message) const;
  std::vector<uint64_t> encode_bits(const Bits& payload) const;
  Bits message_bits(const std::vector<uint64_t>& message) const;

  // Positions are marked missing by any value >= p in their first component.
  std::optional<RsDecoded> unique_decode(const std::vector<uint64_t>& word) const;
  // The L nearest codewords among those agreeing with the word on at least
  // k positions, ordered by (distance, message).
  std::vector<RsDecoded> list_decode(const std::vector<uint64_t>& word, size_t L) const;

  uint32_t distance(const std::vector<uint64_t>& word, const std::vector<uint64_t>& codeword) const;

 private:
  std::vector<uint64_t> combine(const std::vector<uint64_t>& word) const;
  std::optional<std::vector<uint64_t>> reconstruct(const std::vector<uint64_t>& word,
                                                   const std::vector<uint64_t>& positions) const;

  PrimeField f_{kMersenne61};
  uint32_t k_, n_c_, m_;
  std::vector<uint64_t> combo_;
};

// Bits packed into 60-bit field elements, little-endian within an element.
std::vector<uint64_t> pack_bits(const Bits& bits, size_t elements);
Bits unpack_bits(const std::vector<uint64_t>& elements, size_t bits);

struct HashSpec {
  uint64_t seed = 0;
  uint32_t output_len = 64;
  // Input bits per field symbol, 1..60.
  uint32_t chunk_bits = 60;
};

// Seeded polynomial hash over GF(2^61 - 1):
//   (len + 1) + sum_i (chunk_i + 1) r^i  for i = 1..#chunks,
// evaluated at ceil(output_len / 60) seed-derived points and truncated.
Bits hash_eval(const HashSpec& spec, const Bits& input);
std::vector<uint64_t> hash_words(const HashSpec& spec, const Bits& input);

// Seed-derived evaluation point of hash round t.
uint64_t hash_point(uint64_t seed, uint32_t t);

// Incremental bit-level (chunk width 1) hash of root paths with a single
// evaluation point; matches hash_words with chunk_bits = 1 and output <= 60.
class PathHasher {
 public:
  explicit PathHasher(uint64_t seed, uint32_t max_len);
  // Recently built hashers are reused (per thread).
  static std::shared_ptr<const PathHasher> cached(uint64_t seed, uint32_t max_len);
  uint64_t root() const { return 1; }
  uint64_t child(uint64_t parent_hash, uint32_t parent_depth, uint8_t bit) const {
    return f_.add(parent_hash, term(parent_depth, bit));
  }
  // Contribution of one edge; a path hash is the root value plus its terms.
  uint64_t term(uint32_t parent_depth, uint8_t bit) const {
    return f_.add(1, f_.mul(bit + 1, powers_[parent_depth + 1]));
  }
  uint64_t add(uint64_t a, uint64_t b) const { return f_.add(a, b); }
  uint64_t of(const Bits& path) const;
  uint64_t point() const { return r_; }

 private:
  PrimeField f_{kMersenne61};
  uint64_t r_;
  std::vector<uint64_t> powers_;
};

}  // namespace icoding
