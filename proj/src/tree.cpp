#include "icoding/tree.hpp"

#include <sstream>

namespace icoding {

namespace {

uint64_t table_base(uint32_t depth) {
  uint64_t base = 0;
  for (uint32_t j = depth % 2; j < depth; j += 2) base += uint64_t{1} << j;
  return base;
}

class InstanceCursor final : public PartyCursor {
 public:
  InstanceCursor(const ProtocolInstance* inst) : inst_(inst) {}
  uint32_t depth() const override { return key_.depth; }
  uint8_t preferred() const override { return inst_->preferred(key_); }
  void descend(uint8_t bit) override { key_ = key_.child(bit); }
  std::unique_ptr<PartyCursor> clone() const override { return std::make_unique<InstanceCursor>(*this); }

 private:
  const ProtocolInstance* inst_;
  NodeKey key_;
};

class InstanceParty final : public PartyInput {
 public:
  InstanceParty(const ProtocolInstance* inst, Party p) : inst_(inst), party_(p) {}
  Party party() const override { return party_; }
  uint32_t depth() const override { return inst_->depth(); }
  std::unique_ptr<PartyCursor> root() const override { return std::make_unique<InstanceCursor>(inst_); }

 private:
  const ProtocolInstance* inst_;
  Party party_;
};

void check_depth(uint32_t n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("protocol depth must be even and at least 2");
}

}  // namespace

ProtocolInstance ProtocolInstance::random(uint32_t n, uint64_t seed) {
  check_depth(n);
  ProtocolInstance inst;
  inst.n_ = n;
  inst.seed_ = seed;
  return inst;
}

uint64_t ProtocolInstance::owned_count(uint32_t n, Party p) {
  uint64_t c = 0;
  for (uint32_t d = index_of(p); d < n; d += 2) c += uint64_t{1} << d;
  return c;
}

ProtocolInstance ProtocolInstance::from_tables(uint32_t n, Bits table_a, Bits table_b) {
  check_depth(n);
  if (n > kMaxExplicitDepth) throw std::invalid_argument("explicit tables limited to depth 24");
  if (table_a.size() != owned_count(n, Party::Alice) || table_b.size() != owned_count(n, Party::Bob)) {
    throw std::invalid_argument("preferred table size does not match depth");
  }
  for (uint8_t b : table_a)
    if (b > 1) throw std::invalid_argument("preferred bits must be 0 or 1");
  for (uint8_t b : table_b)
    if (b > 1) throw std::invalid_argument("preferred bits must be 0 or 1");
  ProtocolInstance inst;
  inst.n_ = n;
  inst.explicit_ = true;
  inst.table_[0] = std::move(table_a);
  inst.table_[1] = std::move(table_b);
  return inst;
}

uint8_t ProtocolInstance::preferred(const NodeKey& node) const {
  if (explicit_) {
    const Bits& t = table_[index_of(owner_of_depth(node.depth))];
    return t[table_base(node.depth) + (node.heap - (uint64_t{1} << node.depth))];
  }
  return static_cast<uint8_t>(mix64(seed_ ^ mix64(node.fp)) & 1u);
}

Bits ProtocolInstance::table(Party p) const {
  if (explicit_) return table_[index_of(p)];
  if (n_ > kMaxExplicitDepth) throw std::invalid_argument("tables limited to depth 24");
  Bits out;
  out.reserve(owned_count(n_, p));
  // Enumerate owned depths level by level in heap order.
  std::vector<NodeKey> level{NodeKey{}};
  for (uint32_t d = 0; d < n_; ++d) {
    if (owner_of_depth(d) == p)
      for (const NodeKey& k : level) out.push_back(preferred(k));
    if (d + 1 == n_) break;
    std::vector<NodeKey> next;
    next.reserve(level.size() * 2);
    for (const NodeKey& k : level) {
      next.push_back(k.child(0));
      next.push_back(k.child(1));
    }
    level.swap(next);
  }
  return out;
}

std::string ProtocolInstance::serialize() const {
  std::ostringstream os;
  os << "n=" << n_ << "\n";
  if (!explicit_ && n_ > kMaxExplicitDepth) {
    os << "seed=" << seed_ << "\n";
    return os.str();
  }
  os << "A:" << bits_to_string(table(Party::Alice)) << "\n";
  os << "B:" << bits_to_string(table(Party::Bob)) << "\n";
  return os.str();
}

ProtocolInstance ProtocolInstance::parse(std::string_view text) {
  std::optional<uint32_t> n;
  std::optional<uint64_t> seed;
  std::optional<Bits> a, b;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("n=", 0) == 0) n = static_cast<uint32_t>(std::stoul(line.substr(2)));
    else if (line.rfind("seed=", 0) == 0) seed = std::stoull(line.substr(5));
    else if (line.rfind("A:", 0) == 0) a = bits_from_string(line.substr(2));
    else if (line.rfind("B:", 0) == 0) b = bits_from_string(line.substr(2));
    else throw std::invalid_argument("unrecognised instance line: " + line);
  }
  if (!n) throw std::invalid_argument("instance text lacks n=");
  if (a && b) return from_tables(*n, std::move(*a), std::move(*b));
  if (seed && !a && !b) return random(*n, *seed);
  throw std::invalid_argument("instance text needs both A: and B: tables");
}

std::unique_ptr<PartyInput> ProtocolInstance::party(Party p) const {
  return std::make_unique<InstanceParty>(this, p);
}

Bits common_path(const ProtocolInstance& instance) {
  Bits path;
  path.reserve(instance.depth());
  NodeKey key;
  for (uint32_t d = 0; d < instance.depth(); ++d) {
    uint8_t b = instance.preferred(key);
    path.push_back(b);
    key = key.child(b);
  }
  return path;
}

bool consistent_with(const PartyInput& input, const Bits& path) {
  auto cur = input.root();
  for (uint8_t b : path) {
    if (owner_of_depth(cur->depth()) == input.party() && cur->preferred() != b) return false;
    cur->descend(b);
  }
  return true;
}

int32_t SubtreeEdgeSet::add_child(int32_t id, uint8_t bit) {
  int32_t c = nodes_[static_cast<size_t>(id)].child[bit];
  if (c != kNone) return c;
  Node n;
  n.parent = id;
  n.bit = bit;
  n.depth = nodes_[static_cast<size_t>(id)].depth + 1;
  c = static_cast<int32_t>(nodes_.size());
  nodes_.push_back(n);
  nodes_[static_cast<size_t>(id)].child[bit] = c;
  return c;
}

int32_t SubtreeEdgeSet::add_path(const Bits& path) { return add_path_from(kRoot, path); }

int32_t SubtreeEdgeSet::add_path_from(int32_t start, const Bits& path) {
  int32_t cur = start;
  for (uint8_t b : path) cur = add_child(cur, b);
  return cur;
}

int32_t SubtreeEdgeSet::find(const Bits& path) const {
  int32_t cur = kRoot;
  for (uint8_t b : path) {
    cur = child(cur, b);
    if (cur == kNone) return kNone;
  }
  return cur;
}

Bits SubtreeEdgeSet::path_to(int32_t id) const {
  Bits p(node(id).depth);
  for (int32_t cur = id; cur != kRoot; cur = node(cur).parent) p[node(cur).depth - 1] = node(cur).bit;
  return p;
}

std::vector<std::pair<uint64_t, uint8_t>> SubtreeEdgeSet::heap_edges() const {
  std::vector<uint64_t> heap(nodes_.size(), 0);
  heap[0] = 1;
  std::vector<std::pair<uint64_t, uint8_t>> out;
  out.reserve(size());
  for (size_t i = 1; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.depth > 62) throw std::out_of_range("heap edge keys need depth <= 62");
    heap[i] = heap[static_cast<size_t>(n.parent)] * 2 + n.bit;
    out.emplace_back(heap[static_cast<size_t>(n.parent)], n.bit);
  }
  return out;
}

SubtreeEdgeSet SubtreeEdgeSet::from_heap_edges(const std::vector<std::pair<uint64_t, uint8_t>>& edges) {
  SubtreeEdgeSet s;
  for (const auto& [h, bit] : edges) {
    if (h == 0) throw std::invalid_argument("heap index 0 is not a node");
    Bits path;
    for (uint64_t x = h; x > 1; x >>= 1) path.push_back(static_cast<uint8_t>(x & 1));
    int32_t cur = kRoot;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      cur = s.child(cur, *it);
      if (cur == kNone) throw std::invalid_argument("edge set is not ancestor-closed");
    }
    s.add_child(cur, bit);
  }
  return s;
}

uint32_t SubtreeEdgeSet::max_depth() const {
  uint32_t m = 0;
  for (const Node& n : nodes_) m = std::max(m, n.depth);
  return m;
}

bool operator==(const SubtreeEdgeSet& a, const SubtreeEdgeSet& b) {
  if (a.size() != b.size()) return false;
  std::vector<std::pair<int32_t, int32_t>> stack{{SubtreeEdgeSet::kRoot, SubtreeEdgeSet::kRoot}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    for (uint8_t bit = 0; bit < 2; ++bit) {
      int32_t cx = a.child(x, bit), cy = b.child(y, bit);
      if ((cx == SubtreeEdgeSet::kNone) != (cy == SubtreeEdgeSet::kNone)) return false;
      if (cx != SubtreeEdgeSet::kNone) stack.emplace_back(cx, cy);
    }
  }
  return true;
}

Bits subtree_encode(const SubtreeEdgeSet& set, size_t bound) {
  if (set.size() > bound) {
    throw SizeExceeded("edge set of size " + std::to_string(set.size()) + " exceeds bound " +
                       std::to_string(bound));
  }
  Bits out;
  out.reserve(4 * bound);
  // Iterative DFS; each frame remembers the next child bit to try.
  std::vector<std::pair<int32_t, uint8_t>> stack{{SubtreeEdgeSet::kRoot, 0}};
  while (!stack.empty()) {
    auto& [id, next] = stack.back();
    if (next < 2) {
      uint8_t bit = next++;
      int32_t c = set.child(id, bit);
      if (c != SubtreeEdgeSet::kNone) {
        out.push_back(0);
        out.push_back(bit);
        stack.emplace_back(c, 0);
      }
      continue;
    }
    stack.pop_back();
    if (!stack.empty()) {
      out.push_back(1);
      out.push_back(1);
    }
  }
  while (out.size() < 4 * bound) {
    out.push_back(1);
    out.push_back(0);
  }
  return out;
}

std::optional<SubtreeEdgeSet> subtree_decode(const Bits& bits, std::optional<uint32_t> max_depth) {
  if (bits.size() % 2 != 0) return std::nullopt;
  SubtreeEdgeSet set;
  int32_t cur = SubtreeEdgeSet::kRoot;
  bool padding = false;
  for (size_t i = 0; i < bits.size(); i += 2) {
    uint8_t a = bits[i], b = bits[i + 1];
    if (a > 1 || b > 1) return std::nullopt;
    if (padding) {
      if (!(a == 1 && b == 0)) return std::nullopt;
      continue;
    }
    if (a == 0) {
      // A right-down move already made forbids a later left-down move, and a
      // child may be entered only once.
      if (set.child(cur, b) != SubtreeEdgeSet::kNone) return std::nullopt;
      if (b == 0 && set.child(cur, 1) != SubtreeEdgeSet::kNone) return std::nullopt;
      if (max_depth && set.node(cur).depth + 1 > *max_depth) return std::nullopt;
      cur = set.add_child(cur, b);
    } else if (b == 1) {
      if (cur == SubtreeEdgeSet::kRoot) return std::nullopt;
      cur = set.node(cur).parent;
    } else {
      if (cur != SubtreeEdgeSet::kRoot) return std::nullopt;
      padding = true;
    }
  }
  if (cur != SubtreeEdgeSet::kRoot) return std::nullopt;
  return set;
}

}  // namespace icoding
