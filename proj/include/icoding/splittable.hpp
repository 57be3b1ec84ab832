#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "icoding/common.hpp"

namespace icoding {

// Level code applied to one aligned block of 2^(level-1) bits: the block
// value repeated three times below 16 bits, Reed-Solomon at rate 1/2 over
// GF(2^8) up to 1024 bits and over GF(2^16) beyond.
uint32_t level_code_length(uint64_t block_bits);
// |work| accumulates field operations.
void level_encode(const uint8_t* bits, uint64_t block_bits, uint16_t* out, uint64_t& work);

// Number of levels of a string of |len| bits (0 for the empty string).
uint32_t split_levels(uint64_t len);
// Position j (1-based) of a string at offset x is a level-i break point
// iff 2^(i-1) divides j + x. A level-i block ends at a break point.
bool is_break_point(uint64_t j, uint64_t offset, uint32_t level);

class SplittableEncoding {
 public:
  struct Level {
    uint64_t block_bits = 0;
    uint64_t first_end = 0;  // absolute end position of the first whole block
    uint64_t count = 0;
    uint32_t code_len = 0;
    std::vector<uint16_t> symbols;  // count * code_len, block-major
  };

  SplittableEncoding() = default;
  SplittableEncoding(const Bits& s, uint64_t offset);

  uint64_t offset() const { return offset_; }
  uint64_t length() const { return length_; }
  uint32_t levels() const { return static_cast<uint32_t>(levels_.size()); }
  const Level& level(uint32_t i) const { return levels_.at(i - 1); }
  // Codeword of the level-i block ending at absolute position |end|.
  std::span<const uint16_t> codeword(uint32_t i, uint64_t end) const;
  uint64_t work() const { return work_; }
  uint64_t symbol_count() const;

 private:
  uint64_t offset_ = 0;
  uint64_t length_ = 0;
  std::vector<Level> levels_;
  uint64_t work_ = 0;
};

// Positions i..j (1-based, inclusive) of an encoded string, read through the
// stored level structure. i = j + 1 gives the empty view.
class SplittableView {
 public:
  SplittableView() = default;
  SplittableView(const SplittableEncoding* enc, uint64_t i, uint64_t j);

  uint64_t offset() const { return offset_; }
  uint64_t length() const { return length_; }
  uint32_t levels() const { return split_levels(length_); }
  // Absolute end positions of the level-i blocks lying wholly inside.
  std::vector<uint64_t> block_ends(uint32_t i) const;
  std::span<const uint16_t> codeword(uint32_t i, uint64_t end) const { return enc_->codeword(i, end); }

 private:
  const SplittableEncoding* enc_ = nullptr;
  uint64_t offset_ = 0;
  uint64_t length_ = 0;
};

SplittableView extract_sub(const SplittableEncoding& enc, uint64_t i, uint64_t j);

// Consecutive views partitioning one string.
using Covering = std::vector<SplittableView>;

struct EqualityOutcome {
  bool equal = true;
  uint64_t bits = 0;  // communication
  uint64_t work = 0;  // blocks visited plus symbols sampled, both sides
  uint32_t cells = 0;
};

// Equality test of the strings behind two coverings: cut points are
// exchanged, every cell of the common refinement is split into maximal
// aligned blocks, |samples| codeword symbols per block are read at shared
// random positions and the two sample sequences are compared by a hash of
// 2 * samples bits. |log_n| is the width of one cut point on the wire.
EqualityOutcome path_equal_fast(const Covering& a, const Covering& b, uint32_t samples, uint32_t log_n,
                                uint64_t seed);

}  // namespace icoding
