#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icoding/common.hpp"
#include "icoding/splittable.hpp"

namespace icoding {

// A growing, ancestor-closed edge set of the depth-n protocol tree. Every
// node other than the root stands for the edge entering it. Per node it
// keeps subtree sizes, 2^i-level upward pointers and, when indexed, a
// semi-balanced search tree over the edges whose nodes hold the tree path
// from their anchor (lowest search-tree ancestor they lie below) down to
// themselves, optionally with its splittable encoding.
class IncrementalSubtree {
 public:
  static constexpr int32_t kRoot = 0;
  static constexpr int32_t kNone = -1;

  enum class Index { None, SearchTree, SearchTreeWithCodes };

  struct BstNode {
    int32_t in = kNone;   // edges below this one in the protocol tree
    int32_t out = kNone;  // the rest of the region
    int32_t up = kNone;
    int32_t anchor = kRoot;
    uint32_t size = 1;
  };

  struct Counters {
    uint64_t pointer_hops = 0;
    uint64_t insert_work = 0;   // search-tree nodes visited on insertion
    uint64_t rebuild_work = 0;  // region elements processed by rebuilds
    uint64_t rebuilds = 0;
    uint64_t encode_work = 0;   // level-code field operations
  };

  explicit IncrementalSubtree(uint32_t max_depth, Index index = Index::None);

  // Adds the edge below |parent| (which must already exist); returns the
  // child node, existing or new.
  int32_t add_edge(int32_t parent, uint8_t bit);
  int32_t add_path(const Bits& path, int32_t from = kRoot);
  int32_t find(const Bits& path, int32_t from = kRoot) const;

  uint32_t max_depth() const { return max_depth_; }
  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const { return nodes_.size() - 1; }
  int32_t child(int32_t id, uint8_t b) const { return nodes_[static_cast<size_t>(id)].child[b]; }
  int32_t parent(int32_t id) const { return nodes_[static_cast<size_t>(id)].parent; }
  uint32_t depth(int32_t id) const { return nodes_[static_cast<size_t>(id)].depth; }
  uint8_t bit(int32_t id) const { return nodes_[static_cast<size_t>(id)].bit; }
  // Nodes in the subtree rooted at |id|, itself included.
  uint32_t subtree_size(int32_t id) const { return nodes_[static_cast<size_t>(id)].size; }
  const std::vector<int32_t>& at_depth(uint32_t d) const;
  Bits path_to(int32_t id) const;
  // Bits of the tree path from ancestor |top| down to |id|.
  Bits segment(int32_t top, int32_t id) const;

  // The edge |levels| levels above edge |e|; levels <= depth(e) - 1.
  int32_t ancestor(int32_t e, uint32_t levels) const;
  // Same walk allowed to reach the root.
  int32_t lift(int32_t id, uint32_t levels) const;
  // |anc| is |id| or one of its ancestors.
  bool is_ancestor(int32_t anc, int32_t id) const;

  Index index() const { return index_; }
  int32_t bst_root() const { return bst_root_; }
  const BstNode& bst(int32_t id) const { return bst_[static_cast<size_t>(id)]; }
  uint32_t bst_size(int32_t id) const { return id == kNone ? 0 : bst(id).size; }
  uint32_t bst_height() const;
  const SplittableEncoding& piece(int32_t id) const { return pieces_[static_cast<size_t>(id)]; }
  uint64_t piece_length(int32_t id) const { return depth(id) - depth(bst(id).anchor); }
  // Stored pieces along the anchor chain, concatenating to the root path of |id|.
  Covering covering(int32_t id) const;
  // Anchor chain length of |id| (number of pieces in its covering).
  uint32_t chain_length(int32_t id) const;

  // Every search-tree node with at least 8 elements keeps both sides at
  // 1/5 of its size or more; sizes and side membership are consistent.
  bool audit_search_tree(std::string* why = nullptr) const;
  // Summed piece lengths under every search-tree node v are at most
  // gamma * size(v) * ceil(log2 n).
  bool audit_piece_lengths(uint32_t gamma, std::string* why = nullptr) const;

  const Counters& counters() const { return counters_; }
  void reset_counters() const { counters_ = Counters{}; }

 private:
  struct Node {
    int32_t child[2] = {kNone, kNone};
    int32_t parent = kNone;
    uint32_t depth = 0;
    uint32_t size = 1;
    uint8_t bit = 0;
  };

  bool violates(int32_t g) const;
  void bst_insert(int32_t x);
  void rebuild(int32_t g);
  int32_t build(std::vector<int32_t>& region, int32_t anchor, int32_t up);
  void set_piece(int32_t x);

  uint32_t max_depth_;
  uint32_t log_levels_;
  Index index_;
  std::vector<Node> nodes_;
  std::vector<int32_t> up_;  // log_levels_ entries per node
  std::vector<std::vector<int32_t>> by_depth_;
  int32_t bst_root_ = kNone;
  std::vector<BstNode> bst_;
  std::vector<SplittableEncoding> pieces_;
  std::vector<uint32_t> scratch_size_;
  std::vector<uint32_t> scratch_mark_;
  uint32_t epoch_ = 0;
  mutable Counters counters_;
};

}  // namespace icoding
