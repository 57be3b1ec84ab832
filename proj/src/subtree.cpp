#include "icoding/subtree.hpp"

#include <algorithm>
#include <stdexcept>

namespace icoding {

IncrementalSubtree::IncrementalSubtree(uint32_t max_depth, Index index)
    : max_depth_(max_depth), log_levels_(ceil_log2(uint64_t{max_depth} + 1) + 1), index_(index) {
  nodes_.emplace_back();
  up_.assign(log_levels_, kNone);
  by_depth_.resize(max_depth + 1);
  by_depth_[0].push_back(kRoot);
  if (index_ != Index::None) {
    bst_.emplace_back();
    pieces_.emplace_back();
    scratch_size_.push_back(0);
    scratch_mark_.push_back(0);
  }
}

int32_t IncrementalSubtree::add_edge(int32_t parent, uint8_t b) {
  if (parent < 0 || static_cast<size_t>(parent) >= nodes_.size()) {
    throw std::invalid_argument("parent edge missing: the set must stay ancestor-closed");
  }
  if (b > 1) throw std::invalid_argument("edge label must be 0 or 1");
  if (int32_t c = child(parent, b); c != kNone) return c;
  if (depth(parent) >= max_depth_) throw std::length_error("edge below the protocol depth");
  const auto id = static_cast<int32_t>(nodes_.size());
  Node n;
  n.parent = parent;
  n.depth = depth(parent) + 1;
  n.bit = b;
  nodes_.push_back(n);
  nodes_[static_cast<size_t>(parent)].child[b] = id;
  for (int32_t a = parent; a != kNone; a = nodes_[static_cast<size_t>(a)].parent) ++nodes_[static_cast<size_t>(a)].size;
  // Doubling: the 2^i pointer is two hops of 2^(i-1).
  up_.resize(up_.size() + log_levels_, kNone);
  int32_t* mine = &up_[static_cast<size_t>(id) * log_levels_];
  mine[0] = parent;
  for (uint32_t i = 1; i < log_levels_; ++i) {
    const int32_t mid = mine[i - 1];
    mine[i] = mid == kNone ? kNone : up_[static_cast<size_t>(mid) * log_levels_ + i - 1];
  }
  by_depth_[n.depth].push_back(id);
  if (index_ != Index::None) {
    bst_.emplace_back();
    pieces_.emplace_back();
    scratch_size_.push_back(0);
    scratch_mark_.push_back(0);
    bst_insert(id);
  }
  return id;
}

int32_t IncrementalSubtree::add_path(const Bits& path, int32_t from) {
  int32_t cur = from;
  for (uint8_t b : path) cur = add_edge(cur, b);
  return cur;
}

int32_t IncrementalSubtree::find(const Bits& path, int32_t from) const {
  int32_t cur = from;
  for (uint8_t b : path) {
    if (b > 1) return kNone;
    cur = child(cur, b);
    if (cur == kNone) return kNone;
  }
  return cur;
}

const std::vector<int32_t>& IncrementalSubtree::at_depth(uint32_t d) const {
  static const std::vector<int32_t> empty;
  return d < by_depth_.size() ? by_depth_[d] : empty;
}

Bits IncrementalSubtree::path_to(int32_t id) const { return segment(kRoot, id); }

Bits IncrementalSubtree::segment(int32_t top, int32_t id) const {
  Bits out(depth(id) - depth(top));
  int32_t cur = id;
  for (size_t k = out.size(); k-- > 0;) {
    out[k] = bit(cur);
    cur = parent(cur);
  }
  if (cur != top) throw std::invalid_argument("segment top is not an ancestor");
  return out;
}

int32_t IncrementalSubtree::lift(int32_t id, uint32_t levels) const {
  if (levels > depth(id)) throw std::out_of_range("lift past the root");
  int32_t cur = id;
  for (uint32_t i = 0; levels != 0; ++i, levels >>= 1) {
    if (levels & 1) {
      cur = up_[static_cast<size_t>(cur) * log_levels_ + i];
      ++counters_.pointer_hops;
    }
  }
  return cur;
}

int32_t IncrementalSubtree::ancestor(int32_t e, uint32_t levels) const {
  if (e <= kRoot || static_cast<size_t>(e) >= nodes_.size()) throw std::out_of_range("not an edge");
  if (levels + 1 > depth(e)) throw std::out_of_range("ancestor level out of range");
  return lift(e, levels);
}

bool IncrementalSubtree::is_ancestor(int32_t anc, int32_t id) const {
  if (depth(anc) > depth(id)) return false;
  return lift(id, depth(id) - depth(anc)) == anc;
}

// ---- search tree ----------------------------------------------------------

bool IncrementalSubtree::violates(int32_t g) const {
  const BstNode& n = bst(g);
  if (n.size < 8) return false;
  const uint32_t small = std::min(bst_size(n.in), bst_size(n.out));
  return 5ull * small < n.size;
}

void IncrementalSubtree::set_piece(int32_t x) {
  if (index_ != Index::SearchTreeWithCodes) return;
  const int32_t a = bst(x).anchor;
  pieces_[static_cast<size_t>(x)] = SplittableEncoding(segment(a, x), depth(a));
  counters_.encode_work += pieces_[static_cast<size_t>(x)].work();
}

void IncrementalSubtree::bst_insert(int32_t x) {
  BstNode& nx = bst_[static_cast<size_t>(x)];
  if (bst_root_ == kNone) {
    bst_root_ = x;
    nx = BstNode{};
    set_piece(x);
    return;
  }
  std::vector<int32_t> path;
  int32_t anchor = kRoot;
  int32_t g = bst_root_;
  while (true) {
    path.push_back(g);
    ++counters_.insert_work;
    const bool inside = is_ancestor(g, x);
    if (inside) anchor = g;
    int32_t& slot = inside ? bst_[static_cast<size_t>(g)].in : bst_[static_cast<size_t>(g)].out;
    if (slot == kNone) {
      slot = x;
      break;
    }
    g = slot;
  }
  BstNode& n = bst_[static_cast<size_t>(x)];
  n.up = path.back();
  n.anchor = anchor;
  n.size = 1;
  set_piece(x);
  for (int32_t p : path) ++bst_[static_cast<size_t>(p)].size;
  for (int32_t p : path) {
    if (violates(p)) {
      rebuild(p);
      break;
    }
  }
}

void IncrementalSubtree::rebuild(int32_t g) {
  ++counters_.rebuilds;
  std::vector<int32_t> region;
  std::vector<int32_t> stack{g};
  while (!stack.empty()) {
    int32_t v = stack.back();
    stack.pop_back();
    region.push_back(v);
    if (bst(v).in != kNone) stack.push_back(bst(v).in);
    if (bst(v).out != kNone) stack.push_back(bst(v).out);
  }
  const BstNode old = bst(g);
  const int32_t root = build(region, old.anchor, old.up);
  if (old.up == kNone) {
    bst_root_ = root;
  } else {
    BstNode& up = bst_[static_cast<size_t>(old.up)];
    (up.in == g ? up.in : up.out) = root;
  }
}

int32_t IncrementalSubtree::build(std::vector<int32_t>& region, int32_t anchor, int32_t up) {
  if (region.empty()) return kNone;
  counters_.rebuild_work += region.size();
  const uint32_t total = static_cast<uint32_t>(region.size());
  const uint32_t mark = ++epoch_;
  for (int32_t v : region) scratch_mark_[static_cast<size_t>(v)] = mark;
  std::sort(region.begin(), region.end(), [&](int32_t a, int32_t b) { return depth(a) > depth(b); });
  for (int32_t v : region) {
    uint32_t s = 1;
    for (uint8_t b = 0; b < 2; ++b) {
      int32_t c = child(v, b);
      if (c != kNone && scratch_mark_[static_cast<size_t>(c)] == mark) s += scratch_size_[static_cast<size_t>(c)];
    }
    scratch_size_[static_cast<size_t>(v)] = s;
  }
  int32_t best = region.back();
  uint32_t best_score = 0;
  for (auto it = region.rbegin(); it != region.rend(); ++it) {
    const uint32_t s = scratch_size_[static_cast<size_t>(*it)];
    const uint32_t score = std::min(s - 1, total - s);
    if (score > best_score) {
      best_score = score;
      best = *it;
    }
  }
  // Descendants of |best| inside the region form the inner side.
  const uint32_t inner_mark = ++epoch_;
  std::vector<int32_t> inside, outside;
  std::vector<int32_t> stack{best};
  while (!stack.empty()) {
    int32_t v = stack.back();
    stack.pop_back();
    scratch_mark_[static_cast<size_t>(v)] = inner_mark;
    if (v != best) inside.push_back(v);
    for (uint8_t b = 0; b < 2; ++b) {
      int32_t c = child(v, b);
      if (c != kNone && scratch_mark_[static_cast<size_t>(c)] == mark) stack.push_back(c);
    }
  }
  for (int32_t v : region)
    if (scratch_mark_[static_cast<size_t>(v)] != inner_mark) outside.push_back(v);

  BstNode& n = bst_[static_cast<size_t>(best)];
  n.up = up;
  n.anchor = anchor;
  n.size = total;
  set_piece(best);
  const int32_t in = build(inside, best, best);
  const int32_t out = build(outside, anchor, best);
  bst_[static_cast<size_t>(best)].in = in;
  bst_[static_cast<size_t>(best)].out = out;
  return best;
}

uint32_t IncrementalSubtree::bst_height() const {
  if (bst_root_ == kNone) return 0;
  uint32_t h = 0;
  std::vector<std::pair<int32_t, uint32_t>> stack{{bst_root_, 1}};
  while (!stack.empty()) {
    auto [v, d] = stack.back();
    stack.pop_back();
    h = std::max(h, d);
    if (bst(v).in != kNone) stack.emplace_back(bst(v).in, d + 1);
    if (bst(v).out != kNone) stack.emplace_back(bst(v).out, d + 1);
  }
  return h;
}

Covering IncrementalSubtree::covering(int32_t id) const {
  if (index_ != Index::SearchTreeWithCodes) throw std::logic_error("subtree built without splittable codes");
  Covering c;
  for (int32_t v = id; v != kRoot; v = bst(v).anchor) {
    const SplittableEncoding& p = piece(v);
    c.push_back(extract_sub(p, 1, p.length()));
  }
  std::reverse(c.begin(), c.end());
  return c;
}

uint32_t IncrementalSubtree::chain_length(int32_t id) const {
  uint32_t k = 0;
  for (int32_t v = id; v != kRoot; v = bst(v).anchor) ++k;
  return k;
}

bool IncrementalSubtree::audit_search_tree(std::string* why) const {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (index_ == Index::None) return fail("no search tree");
  if (edge_count() == 0) return bst_root_ == kNone || fail("root set on empty tree");
  // Each element carries the set of its search-tree ancestors; check them
  // against the protocol tree directly.
  size_t seen = 0;
  std::vector<std::pair<int32_t, int32_t>> stack{{bst_root_, kNone}};
  while (!stack.empty()) {
    auto [v, up] = stack.back();
    stack.pop_back();
    ++seen;
    const BstNode& n = bst(v);
    if (n.up != up) return fail("broken up link at " + std::to_string(v));
    if (n.size != 1 + bst_size(n.in) + bst_size(n.out)) return fail("size counter mismatch at " + std::to_string(v));
    if (violates(v)) return fail("semi-balance lost at " + std::to_string(v));
    int32_t anchor = kRoot;
    for (int32_t c = v, p = n.up; p != kNone; c = p, p = bst(p).up) {
      const bool inside = bst(p).in == c;
      if (inside != (is_ancestor(p, v) && p != v)) return fail("side membership wrong at " + std::to_string(v));
      if (inside && anchor == kRoot) anchor = p;
    }
    if (n.anchor != anchor) return fail("anchor wrong at " + std::to_string(v));
    if (n.in != kNone) stack.emplace_back(n.in, v);
    if (n.out != kNone) stack.emplace_back(n.out, v);
  }
  if (seen != edge_count()) return fail("search tree does not hold every edge");
  return true;
}

bool IncrementalSubtree::audit_piece_lengths(uint32_t gamma, std::string* why) const {
  if (bst_root_ == kNone) return true;
  const uint64_t logn = std::max<uint32_t>(1, ceil_log2(max_depth_));
  std::vector<uint64_t> sum(nodes_.size(), 0);
  std::vector<int32_t> order;
  std::vector<int32_t> stack{bst_root_};
  while (!stack.empty()) {
    int32_t v = stack.back();
    stack.pop_back();
    order.push_back(v);
    if (bst(v).in != kNone) stack.push_back(bst(v).in);
    if (bst(v).out != kNone) stack.push_back(bst(v).out);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int32_t v = *it;
    uint64_t s = piece_length(v);
    if (bst(v).in != kNone) s += sum[static_cast<size_t>(bst(v).in)];
    if (bst(v).out != kNone) s += sum[static_cast<size_t>(bst(v).out)];
    sum[static_cast<size_t>(v)] = s;
    if (s > uint64_t{gamma} * bst(v).size * logn) {
      if (why) *why = "stored length " + std::to_string(s) + " above bound at " + std::to_string(v);
      return false;
    }
  }
  return true;
}

}  // namespace icoding
