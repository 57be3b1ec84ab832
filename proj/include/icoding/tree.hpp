#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icoding/common.hpp"

namespace icoding {

// Identifies a node of the complete binary protocol tree. The heap index is
// exact only while depth <= 62; deeper nodes are identified by the 64-bit
// path fingerprint.
struct NodeKey {
  static constexpr uint64_t kRootFp = 0x5851F42D4C957F2Dull;
  uint32_t depth = 0;
  uint64_t heap = 1;
  uint64_t fp = kRootFp;

  NodeKey child(uint8_t bit) const {
    NodeKey c;
    c.depth = depth + 1;
    c.heap = depth < 62 ? heap * 2 + bit : 0;
    c.fp = mix2(fp, bit + 1);
    return c;
  }
};

// A walk through one party's view of a canonical-form protocol. preferred()
// is defined only at depths the party owns.
class PartyCursor {
 public:
  virtual ~PartyCursor() = default;
  virtual uint32_t depth() const = 0;
  virtual uint8_t preferred() const = 0;
  virtual void descend(uint8_t bit) = 0;
  virtual std::unique_ptr<PartyCursor> clone() const = 0;
};

class PartyInput {
 public:
  virtual ~PartyInput() = default;
  virtual Party party() const = 0;
  virtual uint32_t depth() const = 0;
  virtual std::unique_ptr<PartyCursor> root() const = 0;
};

class ProtocolInstance {
 public:
  static constexpr uint32_t kMaxExplicitDepth = 24;

  // Preferred bits derived from a counter-based generator keyed by seed.
  static ProtocolInstance random(uint32_t n, uint64_t seed);
  // Explicit tables: bits for each owned internal node in heap order.
  static ProtocolInstance from_tables(uint32_t n, Bits table_a, Bits table_b);
  static ProtocolInstance parse(std::string_view text);

  uint32_t depth() const { return n_; }
  uint8_t preferred(const NodeKey& node) const;
  bool is_explicit() const { return explicit_; }
  uint64_t seed() const { return seed_; }

  // Number of internal nodes owned by a party.
  static uint64_t owned_count(uint32_t n, Party p);
  // Preferred-bit table of one party in heap order (requires n <= 24).
  Bits table(Party p) const;
  std::string serialize() const;

  std::unique_ptr<PartyInput> party(Party p) const;

 private:
  uint32_t n_ = 0;
  uint64_t seed_ = 0;
  bool explicit_ = false;
  Bits table_[2];
};

Bits common_path(const ProtocolInstance& instance);

// Walks |path| from the root and reports whether every edge at a depth the
// cursor's party owns is the party's preferred edge.
bool consistent_with(const PartyInput& input, const Bits& path);

class SizeExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Rooted, ancestor-closed edge set of the protocol tree, stored as an arena.
class SubtreeEdgeSet {
 public:
  static constexpr int32_t kNone = -1;
  static constexpr int32_t kRoot = 0;

  struct Node {
    int32_t child[2] = {kNone, kNone};
    int32_t parent = kNone;
    uint32_t depth = 0;
    uint8_t bit = 0;
  };

  SubtreeEdgeSet() : nodes_(1) {}

  size_t size() const { return nodes_.size() - 1; }
  bool empty() const { return nodes_.size() == 1; }
  const Node& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }
  int32_t child(int32_t id, uint8_t bit) const { return nodes_[static_cast<size_t>(id)].child[bit]; }
  size_t node_count() const { return nodes_.size(); }

  // Returns the child node, creating the edge if it is absent.
  int32_t add_child(int32_t id, uint8_t bit);
  // Adds every edge of a root-anchored path; returns the final node.
  int32_t add_path(const Bits& path);
  int32_t add_path_from(int32_t start, const Bits& path);
  // Node reached by following |path| from the root, or kNone.
  int32_t find(const Bits& path) const;
  Bits path_to(int32_t id) const;

  // (heap index of upper endpoint, child bit) pairs; requires depth <= 62.
  std::vector<std::pair<uint64_t, uint8_t>> heap_edges() const;
  static SubtreeEdgeSet from_heap_edges(const std::vector<std::pair<uint64_t, uint8_t>>& edges);

  uint32_t max_depth() const;

  friend bool operator==(const SubtreeEdgeSet& a, const SubtreeEdgeSet& b);

 private:
  std::vector<Node> nodes_;
};

// Depth-first walk: 00 left-down, 01 right-down, 11 up, padded with 10 to
// exactly 4 * bound bits.
Bits subtree_encode(const SubtreeEdgeSet& set, size_t bound);
// nullopt marks an invalid encoding. Edges deeper than max_depth are invalid.
std::optional<SubtreeEdgeSet> subtree_decode(const Bits& bits,
                                             std::optional<uint32_t> max_depth = std::nullopt);

}  // namespace icoding
