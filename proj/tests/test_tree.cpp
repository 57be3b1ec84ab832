#include <functional>
#include <unordered_set>

#include "doctest.h"
#include "icoding/tree.hpp"

using namespace icoding;

namespace {

// Heap-order position of a node among the owner's nodes, computed from scratch.
uint64_t oracle_table_index(uint32_t depth, uint64_t heap) {
  uint64_t idx = 0;
  for (uint32_t d = depth % 2; d < depth; d += 2) idx += uint64_t{1} << d;
  return idx + heap - (uint64_t{1} << depth);
}

Bits replay(uint32_t n, const Bits& ta, const Bits& tb) {
  Bits path;
  uint64_t heap = 1;
  for (uint32_t round = 1; round <= n; ++round) {
    uint32_t depth = round - 1;
    // odd rounds are Alice's
    const Bits& t = (round % 2 == 1) ? ta : tb;
    uint8_t b = t[oracle_table_index(depth, heap)];
    path.push_back(b);
    heap = heap * 2 + b;
  }
  return path;
}

}  // namespace

TEST_CASE("common path of the all-left instance") {
  const uint32_t n = 6;
  auto inst = ProtocolInstance::from_tables(n, Bits(ProtocolInstance::owned_count(n, Party::Alice), 0),
                                            Bits(ProtocolInstance::owned_count(n, Party::Bob), 0));
  CHECK(common_path(inst) == Bits(n, 0));
}

TEST_CASE("depth two instance forced path") {
  auto inst = ProtocolInstance::from_tables(2, Bits{1}, Bits{0, 0});
  CHECK(bits_to_string(common_path(inst)) == "10");
}

TEST_CASE("depth two has three preferred bits") {
  CHECK(ProtocolInstance::owned_count(2, Party::Alice) + ProtocolInstance::owned_count(2, Party::Bob) == 3);
  auto inst = ProtocolInstance::random(2, 77);
  CHECK(inst.table(Party::Alice).size() == 1);
  CHECK(inst.table(Party::Bob).size() == 2);
}

TEST_CASE("random instance common path equals a round-by-round replay") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = ProtocolInstance::random(16, seed * 31 + 5);
    CHECK(common_path(inst) == replay(16, inst.table(Party::Alice), inst.table(Party::Bob)));
  }
}

TEST_CASE("common path is consistent with both parties") {
  auto inst = ProtocolInstance::random(64, 9);
  Bits p = common_path(inst);
  CHECK(p.size() == 64);
  CHECK(consistent_with(*inst.party(Party::Alice), p));
  CHECK(consistent_with(*inst.party(Party::Bob), p));
  Bits q = p;
  q[0] ^= 1;
  CHECK_FALSE(consistent_with(*inst.party(Party::Alice), q));
}

TEST_CASE("random instances are deterministic and seed-sensitive") {
  CHECK(ProtocolInstance::random(4, 1234).serialize() == ProtocolInstance::random(4, 1234).serialize());
  int equal = 0;
  for (uint64_t s = 0; s < 1000; ++s) {
    if (ProtocolInstance::random(4, s).serialize() == ProtocolInstance::random(4, s + 1).serialize()) ++equal;
  }
  // 15 preferred bits: an accidental match has probability 2^-15 per seed.
  CHECK(equal <= 3);
  CHECK_THROWS_AS(ProtocolInstance::random(5, 0), std::invalid_argument);
  CHECK_THROWS_AS(ProtocolInstance::random(0, 0), std::invalid_argument);
}

TEST_CASE("instance text round trip") {
  auto inst = ProtocolInstance::random(8, 42);
  auto back = ProtocolInstance::parse(inst.serialize());
  CHECK(back.serialize() == inst.serialize());
  CHECK(common_path(back) == common_path(inst));
  auto big = ProtocolInstance::random(64, 3);
  CHECK(common_path(ProtocolInstance::parse(big.serialize())) == common_path(big));
  CHECK_THROWS(ProtocolInstance::parse("n=4\nA:0\n"));
}

TEST_CASE("subtree encoding examples") {
  SubtreeEdgeSet empty;
  CHECK(bits_to_string(subtree_encode(empty, 1)) == "1010");

  SubtreeEdgeSet left;
  left.add_child(SubtreeEdgeSet::kRoot, 0);
  CHECK(bits_to_string(subtree_encode(left, 1)) == "0011");

  SubtreeEdgeSet both;
  both.add_child(SubtreeEdgeSet::kRoot, 0);
  both.add_child(SubtreeEdgeSet::kRoot, 1);
  CHECK(bits_to_string(subtree_encode(both, 2)) == "00110111");

  CHECK_THROWS_AS(subtree_encode(both, 1), SizeExceeded);
}

TEST_CASE("subtree decoding examples") {
  auto a = subtree_decode(bits_from_string("0011"));
  REQUIRE(a);
  CHECK(a->size() == 1);
  CHECK(a->child(SubtreeEdgeSet::kRoot, 0) != SubtreeEdgeSet::kNone);
  auto e = subtree_decode(bits_from_string("1010"));
  REQUIRE(e);
  CHECK(e->empty());
  CHECK_FALSE(subtree_decode(bits_from_string("1100")));
  CHECK_FALSE(subtree_decode(bits_from_string("1000")));      // padding then a move
  CHECK_FALSE(subtree_decode(bits_from_string("0010")));      // padding away from the root
  CHECK_FALSE(subtree_decode(bits_from_string("01110011")));  // right before left
  CHECK_FALSE(subtree_decode(bits_from_string("00110011")));  // revisits the left child
  CHECK_FALSE(subtree_decode(bits_from_string("001")));
  CHECK_FALSE(subtree_decode(bits_from_string("0000111111"), 1));
}

TEST_CASE("exhaustive round trip and injectivity at depth 6") {
  // Enumerates every ancestor-closed edge set of at most 12 edges in the
  // depth-6 tree by include/exclude over an ordered frontier.
  const uint32_t depth = 6;
  const size_t bound = 12;
  std::vector<std::pair<uint64_t, uint8_t>> chosen;
  std::unordered_set<std::string> encodings;
  size_t count = 0, mismatches = 0;
  std::function<void(std::vector<std::pair<uint64_t, uint8_t>>)> rec =
      [&](std::vector<std::pair<uint64_t, uint8_t>> frontier) {
        if (frontier.empty() || chosen.size() == bound) {
          auto set = SubtreeEdgeSet::from_heap_edges(chosen);
          auto enc = subtree_encode(set, bound);
          auto dec = subtree_decode(enc);
          if (!dec || !(*dec == set) || dec->size() != chosen.size()) ++mismatches;
          encodings.insert(bits_to_string(enc));
          ++count;
          return;
        }
        auto f = frontier.front();
        std::vector<std::pair<uint64_t, uint8_t>> rest(frontier.begin() + 1, frontier.end());
        rec(rest);
        chosen.push_back(f);
        uint64_t child = f.first * 2 + f.second;
        uint32_t child_depth = 0;
        for (uint64_t x = child; x > 1; x >>= 1) ++child_depth;
        if (child_depth < depth) {
          rest.emplace_back(child, 0);
          rest.emplace_back(child, 1);
        }
        rec(rest);
        chosen.pop_back();
      };
  rec({{1, 0}, {1, 1}});
  CHECK(mismatches == 0);
  CHECK(encodings.size() == count);
  CHECK(count > 100000);
}

TEST_CASE("edge set helpers") {
  SubtreeEdgeSet s;
  Bits p = bits_from_string("0110");
  int32_t leaf = s.add_path(p);
  CHECK(s.size() == 4);
  CHECK(s.path_to(leaf) == p);
  CHECK(s.find(p) == leaf);
  CHECK(s.find(bits_from_string("1")) == SubtreeEdgeSet::kNone);
  CHECK(SubtreeEdgeSet::from_heap_edges(s.heap_edges()) == s);
  CHECK_THROWS(SubtreeEdgeSet::from_heap_edges({{2, 0}}));
}
