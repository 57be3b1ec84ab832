#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>

#include "icoding/ecc.hpp"
#include "icoding/subtree.hpp"

namespace icoding {

class PromiseViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntersectParams {
  uint32_t C = 4;
  uint64_t seed = 0;
  bool verify_promise = false;  // brute-force check before running
  bool audit = true;            // compare every answer against the truth
};

struct IntersectStats {
  uint64_t iterations = 0;   // outer search steps
  uint64_t comparisons = 0;
  uint64_t bits = 0;
  uint64_t messages = 0;
  uint64_t alice_work = 0;
  uint64_t bob_work = 0;
  uint64_t max_comparison_work = 0;
  uint64_t collisions = 0;   // answers that disagreed with the truth
  uint64_t noise_flips = 0;
  uint64_t steps = 0;
  uint64_t backtracks = 0;
};

struct IntersectResult {
  Bits path;
  int32_t node_a = IncrementalSubtree::kRoot;
  int32_t node_b = IncrementalSubtree::kRoot;
  IntersectStats stats;
};

// Common rooted path of two edge sets, by direct comparison. Throws
// PromiseViolation when the common part branches.
IntersectResult brute_force_intersection(const IncrementalSubtree& a, const IncrementalSubtree& b);

// Hash length 2 * C * ceil(log2 n) bits for depth-n trees.
uint32_t path_hash_bits(uint32_t C, uint32_t n);
// floor(log_{3/2} M), at least 1.
uint32_t search_depth_bound(uint64_t M);
// Outer iterations allowed to the deterministic search.
uint32_t simple_iteration_cap(uint64_t M);

// Alice's side of the deterministic search: a candidate region (edges
// below the last matched edge, minus subtrees already answered no) split at
// an edge holding between a third and two thirds of it.
class SimpleSearchAlice {
 public:
  SimpleSearchAlice(const IncrementalSubtree& tree, uint32_t hash_bits, uint64_t seed);

  // Edge of the pending query, kNone once the region is empty.
  int32_t current() const { return current_; }
  const std::vector<uint64_t>& current_key() const { return key_; }
  void answer(bool match);
  int32_t result() const { return anchor_; }
  std::vector<uint64_t> key_of(int32_t node) const;
  uint64_t work() const { return work_; }
  uint32_t queries() const { return queries_; }

 private:
  void advance();
  std::vector<uint64_t> raw_from(int32_t top, const std::vector<uint64_t>& top_raw, int32_t node) const;
  std::vector<uint64_t> masked(std::vector<uint64_t> raw) const;

  const IncrementalSubtree* tree_;
  uint32_t bits_;
  std::vector<std::shared_ptr<const PathHasher>> hashers_;
  int32_t anchor_ = IncrementalSubtree::kRoot;
  std::vector<int32_t> removed_;
  int32_t current_ = IncrementalSubtree::kNone;
  std::vector<uint64_t> key_;
  std::vector<uint64_t> anchor_raw_, current_raw_;
  uint64_t work_ = 0;
  uint32_t queries_ = 0;
};

// Bob's side: the hashes of all his root paths in a hash table.
class SimpleSearchBob {
 public:
  SimpleSearchBob(const IncrementalSubtree& tree, uint32_t hash_bits, uint64_t seed);
  // A node whose root path hashes to |key|, or kNone.
  int32_t lookup(const std::vector<uint64_t>& key) const;
  uint64_t work() const { return work_; }

 private:
  int32_t probe(const uint64_t* key) const;

  uint32_t words_ = 0;
  std::vector<uint64_t> keys_;  // words_ per node
  std::vector<int32_t> slots_;  // open addressing over node ids
  mutable uint64_t work_ = 0;
};

// Wire form of a hash key: hash_bits bits, 60 per word, low bits first.
Bits key_to_bits(const std::vector<uint64_t>& key, uint32_t hash_bits);
std::vector<uint64_t> key_from_bits(const Bits& bits);

// Alice halves her candidate region with 1/3-2/3 splits and sends the hash
// of the root path of each split edge under one seed; Bob hashes all his
// root paths once and answers match or no match.
IntersectResult intersect_simple(const IncrementalSubtree& a, const IncrementalSubtree& b, const IntersectParams& p);

// Backtracking walk over the same search for exactly 10 * C * h steps with a
// fresh hash salt per step; every answer is flipped with probability delta.
// h = 0 selects search_depth_bound(|A|).
IntersectResult intersect_probabilistic(const IncrementalSubtree& a, const IncrementalSubtree& b,
                                        const IntersectParams& p, double delta, uint32_t h = 0);

// Outer search over Alice's search tree; each candidate is located by Bob's
// own search-tree walk, and every comparison is a splittable-code equality
// test with C * ceil(log2 n) samples per block. Both trees need codes.
IntersectResult intersect_double(const IncrementalSubtree& a, const IncrementalSubtree& b, const IntersectParams& p);

}  // namespace icoding
