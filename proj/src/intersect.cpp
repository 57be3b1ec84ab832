#include "icoding/intersect.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "icoding/ecc.hpp"

namespace icoding {

namespace {

using Tree = IncrementalSubtree;

uint32_t depth_bits(const Tree& t) { return ceil_log2(uint64_t{t.max_depth()} + 1); }

// Root-path hashes of every node of a tree, |words| field elements each,
// truncated to |bits| bits in total.
class PathTable {
 public:
  PathTable(const Tree& t, uint32_t bits, uint64_t seed) : words_((bits + 59) / 60), bits_(bits) {
    for (uint32_t w = 0; w < words_; ++w) hashers_.push_back(PathHasher::cached(mix2(seed, w), t.max_depth()));
    values_.resize(t.node_count() * words_);
    for (uint32_t w = 0; w < words_; ++w) values_[w] = hashers_[w]->root();
    for (size_t id = 1; id < t.node_count(); ++id) {
      const auto i = static_cast<int32_t>(id);
      const auto par = static_cast<size_t>(t.parent(i));
      for (uint32_t w = 0; w < words_; ++w)
        values_[id * words_ + w] = hashers_[w]->child(values_[par * words_ + w], t.depth(i) - 1, t.bit(i));
    }
  }

  uint32_t words() const { return words_; }
  uint64_t raw(int32_t id, uint32_t w) const { return values_[static_cast<size_t>(id) * words_ + w]; }
  uint64_t mask(uint32_t w) const {
    const uint32_t keep = std::min<uint32_t>(60, bits_ - 60 * w);
    return (uint64_t{1} << keep) - 1;
  }
  std::vector<uint64_t> key(int32_t id) const {
    std::vector<uint64_t> k(words_);
    for (uint32_t w = 0; w < words_; ++w) k[w] = raw(id, w) & mask(w);
    return k;
  }

 private:
  uint32_t words_, bits_;
  std::vector<std::shared_ptr<const PathHasher>> hashers_;
  std::vector<uint64_t> values_;
};

// Candidate region: edges strictly below |anchor| outside the |removed| subtrees.
uint64_t region_size(const Tree& t, int32_t anchor, const std::vector<int32_t>& removed) {
  uint64_t s = t.subtree_size(anchor) - 1;
  for (int32_t r : removed) s -= t.subtree_size(r);
  return s;
}

int32_t select_split(const Tree& t, int32_t anchor, const std::vector<int32_t>& removed, uint64_t& work) {
  const uint64_t total = region_size(t, anchor, removed);
  if (total == 0) return Tree::kNone;
  auto adjusted = [&](int32_t v) {
    uint64_t s = t.subtree_size(v);
    for (int32_t r : removed) {
      ++work;
      if (t.is_ancestor(v, r)) s -= t.subtree_size(r);
    }
    return s;
  };
  // Along a unary chain the adjusted size drops by one per step unless the
  // child is itself a removed root, so long chains are crossed by binary
  // search over the nodes of a given depth.
  auto chain_target = [&](int32_t v, uint32_t k) -> int32_t {
    const auto& level = t.at_depth(t.depth(v) + k);
    if (level.size() > 4) return Tree::kNone;
    for (int32_t u : level) {
      ++work;
      if (t.subtree_size(v) != k + t.subtree_size(u) || !t.is_ancestor(v, u)) continue;
      for (int32_t r : removed)
        if (t.is_ancestor(v, r) && t.is_ancestor(r, u)) return Tree::kNone;
      return u;
    }
    return Tree::kNone;
  };
  int32_t v = anchor;
  uint64_t adj_v = total + 1;
  while (true) {
    const uint64_t floor_size = (total + 2) / 3;
    if (adj_v > floor_size + 2 && t.depth(v) < t.max_depth()) {
      uint64_t lo = 0, hi = std::min<uint64_t>(adj_v - floor_size, t.max_depth() - t.depth(v));
      int32_t best = v;
      while (lo < hi) {
        const uint64_t mid = (lo + hi + 1) / 2;
        const int32_t u = chain_target(v, static_cast<uint32_t>(mid));
        if (u != Tree::kNone) {
          lo = mid;
          best = u;
        } else {
          hi = mid - 1;
        }
      }
      if (lo > 0) {
        v = best;
        adj_v -= lo;
      }
    }
    const int32_t c0 = t.child(v, 0), c1 = t.child(v, 1);
    int32_t next = Tree::kNone;
    uint64_t next_size = 0;
    if ((c0 == Tree::kNone) != (c1 == Tree::kNone)) {
      next = c0 == Tree::kNone ? c1 : c0;
      const bool gone = std::find(removed.begin(), removed.end(), next) != removed.end();
      next_size = gone ? 0 : adj_v - 1;
      if (gone) next = Tree::kNone;
    } else {
      for (int32_t c : {c0, c1}) {
        if (c == Tree::kNone) continue;
        const uint64_t s = adjusted(c);
        if (s > next_size) {
          next_size = s;
          next = c;
        }
      }
    }
    ++work;
    if (next == Tree::kNone || 3 * next_size < total) break;
    v = next;
    adj_v = next_size;
  }
  return v;
}

std::vector<int32_t> keep_below(const Tree& t, int32_t v, const std::vector<int32_t>& removed) {
  std::vector<int32_t> out;
  for (int32_t r : removed)
    if (t.is_ancestor(v, r)) out.push_back(r);
  return out;
}

// Removed subtrees stay disjoint: |v| absorbs any removed subtree below it.
std::vector<int32_t> remove_subtree(const Tree& t, int32_t v, const std::vector<int32_t>& removed) {
  std::vector<int32_t> out;
  for (int32_t r : removed)
    if (!t.is_ancestor(v, r)) out.push_back(r);
  out.push_back(v);
  return out;
}

bool truly_common(const Tree& a, int32_t v, const Tree& b) { return b.find(a.path_to(v)) != Tree::kNone; }

void maybe_verify(const Tree& a, const Tree& b, const IntersectParams& p) {
  if (p.verify_promise) (void)brute_force_intersection(a, b);
}

}  // namespace

uint32_t path_hash_bits(uint32_t C, uint32_t n) { return 2 * C * std::max<uint32_t>(1, ceil_log2(n)); }

uint32_t search_depth_bound(uint64_t M) {
  if (M < 2) return 1;
  return std::max<uint32_t>(1, static_cast<uint32_t>(std::floor(std::log(static_cast<double>(M)) / std::log(1.5))));
}

uint32_t simple_iteration_cap(uint64_t M) {
  if (M < 2) return 5;
  return static_cast<uint32_t>(std::ceil(std::log(static_cast<double>(M)) / std::log(1.5))) + 4;
}

IntersectResult brute_force_intersection(const Tree& a, const Tree& b) {
  IntersectResult r;
  int32_t x = Tree::kRoot, y = Tree::kRoot;
  while (true) {
    int found = 0;
    int32_t nx = Tree::kNone, ny = Tree::kNone;
    uint8_t nb = 0;
    for (uint8_t bit = 0; bit < 2; ++bit) {
      if (a.child(x, bit) != Tree::kNone && b.child(y, bit) != Tree::kNone) {
        ++found;
        nx = a.child(x, bit);
        ny = b.child(y, bit);
        nb = bit;
      }
    }
    if (found == 2) throw PromiseViolation("the common edges branch at depth " + std::to_string(a.depth(x)));
    if (found == 0) break;
    r.path.push_back(nb);
    x = nx;
    y = ny;
  }
  r.node_a = x;
  r.node_b = y;
  return r;
}

Bits key_to_bits(const std::vector<uint64_t>& key, uint32_t hash_bits) {
  Bits out;
  out.reserve(hash_bits);
  for (uint32_t i = 0; i < hash_bits; ++i) out.push_back(static_cast<uint8_t>((key[i / 60] >> (i % 60)) & 1));
  return out;
}

std::vector<uint64_t> key_from_bits(const Bits& bits) {
  std::vector<uint64_t> key((bits.size() + 59) / 60, 0);
  for (size_t i = 0; i < bits.size(); ++i) key[i / 60] |= uint64_t{bits[i] & 1u} << (i % 60);
  return key;
}

SimpleSearchAlice::SimpleSearchAlice(const Tree& tree, uint32_t hash_bits, uint64_t seed)
    : tree_(&tree), bits_(hash_bits) {
  for (uint32_t w = 0; w * 60 < hash_bits; ++w) hashers_.push_back(PathHasher::cached(mix2(seed, w), tree.max_depth()));
  for (const auto& h : hashers_) anchor_raw_.push_back(h->root());
  advance();
}

std::vector<uint64_t> SimpleSearchAlice::raw_from(int32_t top, const std::vector<uint64_t>& top_raw,
                                                  int32_t node) const {
  std::vector<uint64_t> raw = top_raw;
  for (int32_t v = node; v != top; v = tree_->parent(v)) {
    for (uint32_t w = 0; w < hashers_.size(); ++w)
      raw[w] = hashers_[w]->add(raw[w], hashers_[w]->term(tree_->depth(v) - 1, tree_->bit(v)));
  }
  return raw;
}

std::vector<uint64_t> SimpleSearchAlice::masked(std::vector<uint64_t> raw) const {
  for (uint32_t w = 0; w < raw.size(); ++w) {
    const uint32_t keep = std::min<uint32_t>(60, bits_ - 60 * w);
    raw[w] &= (uint64_t{1} << keep) - 1;
  }
  return raw;
}

std::vector<uint64_t> SimpleSearchAlice::key_of(int32_t node) const {
  std::vector<uint64_t> root(hashers_.size());
  for (uint32_t w = 0; w < hashers_.size(); ++w) root[w] = hashers_[w]->root();
  return masked(raw_from(Tree::kRoot, root, node));
}

void SimpleSearchAlice::advance() {
  current_ = select_split(*tree_, anchor_, removed_, work_);
  if (current_ != Tree::kNone) {
    current_raw_ = raw_from(anchor_, anchor_raw_, current_);
    key_ = masked(current_raw_);
    work_ += tree_->depth(current_) - tree_->depth(anchor_);
  } else {
    key_.clear();
  }
}

void SimpleSearchAlice::answer(bool match) {
  if (current_ == Tree::kNone) return;
  ++queries_;
  if (match) {
    anchor_ = current_;
    anchor_raw_ = current_raw_;
    removed_ = keep_below(*tree_, current_, removed_);
  } else {
    removed_ = remove_subtree(*tree_, current_, removed_);
  }
  advance();
}

SimpleSearchBob::SimpleSearchBob(const Tree& tree, uint32_t hash_bits, uint64_t seed) {
  PathTable t(tree, hash_bits, seed);
  words_ = t.words();
  keys_.resize(tree.node_count() * words_);
  size_t cap = 16;
  while (cap < 2 * tree.node_count()) cap *= 2;
  slots_.assign(cap, Tree::kNone);
  for (size_t id = 0; id < tree.node_count(); ++id) {
    uint64_t* k = &keys_[id * words_];
    for (uint32_t w = 0; w < words_; ++w) k[w] = t.raw(static_cast<int32_t>(id), w) & t.mask(w);
    const int32_t r = probe(k);
    if (r < 0) slots_[static_cast<size_t>(~r)] = static_cast<int32_t>(id);
  }
  work_ = tree.node_count() * words_;
}

// Node holding |key|, or ~slot of the free slot where it would go.
int32_t SimpleSearchBob::probe(const uint64_t* key) const {
  const size_t mask = slots_.size() - 1;
  for (size_t h = mix64(key[0]) & mask;; h = (h + 1) & mask) {
    ++work_;
    const int32_t id = slots_[h];
    if (id == Tree::kNone) return ~static_cast<int32_t>(h);
    if (std::equal(key, key + words_, &keys_[static_cast<size_t>(id) * words_])) return id;
  }
}

int32_t SimpleSearchBob::lookup(const std::vector<uint64_t>& key) const {
  if (key.size() != words_) return Tree::kNone;
  const int32_t r = probe(key.data());
  return r >= 0 ? r : Tree::kNone;
}

IntersectResult intersect_simple(const Tree& a, const Tree& b, const IntersectParams& p) {
  maybe_verify(a, b, p);
  IntersectResult res;
  IntersectStats& st = res.stats;
  const uint32_t bits = path_hash_bits(p.C, a.max_depth());
  SimpleSearchAlice alice(a, bits, p.seed);
  SimpleSearchBob bob(b, bits, p.seed);
  int32_t anchor_b = Tree::kRoot;
  const uint32_t cap = simple_iteration_cap(a.edge_count());
  while (alice.current() != Tree::kNone) {
    if (++st.iterations > cap) throw std::logic_error("search exceeded its iteration bound");
    const int32_t hit = bob.lookup(alice.current_key());
    const bool match = hit != Tree::kNone;
    ++st.comparisons;
    st.messages += 2;
    st.bits += bits + 1;
    if (p.audit && match != truly_common(a, alice.current(), b)) ++st.collisions;
    if (match) anchor_b = hit;
    alice.answer(match);
  }
  st.alice_work = alice.work();
  st.bob_work = bob.work();
  res.node_a = alice.result();
  res.node_b = anchor_b;
  res.path = a.path_to(res.node_a);
  return res;
}

IntersectResult intersect_probabilistic(const Tree& a, const Tree& b, const IntersectParams& p, double delta,
                                        uint32_t h) {
  maybe_verify(a, b, p);
  if (delta < 0 || delta >= 0.5) throw std::invalid_argument("noise rate must lie in [0, 1/2)");
  if (h == 0) h = search_depth_bound(a.edge_count());
  IntersectResult res;
  IntersectStats& st = res.stats;
  const uint32_t bits = path_hash_bits(p.C, a.max_depth());
  PathTable ta(a, bits, p.seed), tb(b, bits, p.seed);
  st.bob_work += b.node_count() * tb.words();
  const PrimeField f{kMersenne61};
  std::mt19937_64 noise(mix2(p.seed, 0x0B5E55ED));
  std::bernoulli_distribution flip(delta);

  uint64_t step = 0;
  auto compare = [&](int32_t v, int32_t* found) {
    // Fresh per-step salt applied on top of the root-path hash.
    const uint64_t salt = mix2(p.seed, mix2(step, st.comparisons));
    auto salted = [&](const PathTable& t, int32_t id, uint32_t w) {
      const uint64_t m = 2 + mix2(salt, 2 * w) % (kMersenne61 - 2), c = mix2(salt, 2 * w + 1) % kMersenne61;
      return f.add(f.mul(m, t.raw(id, w)), c) & t.mask(w);
    };
    bool match = false;
    for (int32_t cand : b.at_depth(a.depth(v))) {
      ++st.bob_work;
      bool eq = true;
      for (uint32_t w = 0; w < ta.words() && eq; ++w) eq = salted(ta, v, w) == salted(tb, cand, w);
      if (eq) {
        match = true;
        if (found) *found = cand;
        break;
      }
    }
    ++st.comparisons;
    st.messages += 2;
    st.bits += depth_bits(a) + bits + 1;
    if (p.audit && match != truly_common(a, v, b)) ++st.collisions;
    if (flip(noise)) {
      ++st.noise_flips;
      match = !match;
    }
    return match;
  };

  struct Frame {
    int32_t anchor;
    int32_t anchor_b;
    std::vector<int32_t> removed;
    uint64_t chain = 0;
  };
  std::vector<Frame> stack{{Tree::kRoot, Tree::kRoot, {}, 0}};
  const uint64_t total = 10ull * p.C * h;
  for (step = 0; step < total; ++step) {
    ++st.steps;
    Frame& top = stack.back();
    bool ok = top.anchor == Tree::kRoot || compare(top.anchor, nullptr);
    for (size_t k = 0; ok && k < top.removed.size(); ++k) ok = !compare(top.removed[k], nullptr);
    if (!ok) {
      ++st.backtracks;
      if (top.chain > 0) --top.chain;
      else if (stack.size() > 1) stack.pop_back();
      continue;
    }
    const int32_t v = select_split(a, top.anchor, top.removed, st.alice_work);
    if (v == Tree::kNone) {
      ++top.chain;
      continue;
    }
    ++st.iterations;
    int32_t found = Tree::kNone;
    if (compare(v, &found)) {
      Frame next{v, found == Tree::kNone ? top.anchor_b : found, keep_below(a, v, top.removed), 0};
      stack.push_back(std::move(next));
    } else {
      Frame next{top.anchor, top.anchor_b, remove_subtree(a, v, top.removed), 0};
      stack.push_back(std::move(next));
    }
  }
  res.node_a = stack.back().anchor;
  res.node_b = stack.back().anchor_b;
  res.path = a.path_to(res.node_a);
  return res;
}

IntersectResult intersect_double(const Tree& a, const Tree& b, const IntersectParams& p) {
  if (a.index() != Tree::Index::SearchTreeWithCodes || b.index() != Tree::Index::SearchTreeWithCodes) {
    throw std::invalid_argument("double search needs search trees with splittable codes on both sides");
  }
  maybe_verify(a, b, p);
  IntersectResult res;
  IntersectStats& st = res.stats;
  const uint32_t logn = std::max<uint32_t>(1, ceil_log2(a.max_depth()));
  const uint32_t samples = p.C * logn;
  const uint32_t dbits = depth_bits(a);

  int32_t best_a = Tree::kRoot, best_b = Tree::kRoot;
  uint64_t rng_ctr = 0;
  for (int32_t g = a.bst_root(); g != Tree::kNone;) {
    ++st.iterations;
    const uint32_t target = a.depth(g);
    st.bits += dbits;
    ++st.messages;
    int32_t found = Tree::kRoot;
    for (int32_t f = b.bst_root(); f != Tree::kNone;) {
      ++st.bob_work;
      if (b.depth(f) > target) {
        f = b.bst(f).out;
        continue;
      }
      const uint64_t hops_a = a.counters().pointer_hops;
      const int32_t prefix = a.lift(g, target - b.depth(f));
      const Covering ca = a.covering(prefix), cb = b.covering(f);
      const EqualityOutcome eq = path_equal_fast(ca, cb, samples, dbits, mix2(p.seed, ++rng_ctr));
      const uint64_t work = eq.work + ca.size() + cb.size() + (a.counters().pointer_hops - hops_a);
      st.max_comparison_work = std::max(st.max_comparison_work, work);
      st.alice_work += eq.work / 2 + ca.size() + (a.counters().pointer_hops - hops_a);
      st.bob_work += eq.work / 2 + cb.size();
      ++st.comparisons;
      st.messages += 3;
      st.bits += dbits + eq.bits;
      if (p.audit && eq.equal != (b.find(a.path_to(prefix)) == f)) ++st.collisions;
      if (eq.equal) {
        found = f;
        f = b.bst(f).in;
      } else {
        f = b.bst(f).out;
      }
    }
    const bool contains = b.depth(found) == target && found != Tree::kRoot;
    ++st.messages;
    st.bits += 1;
    if (contains) {
      best_a = g;
      best_b = found;
      g = a.bst(g).in;
    } else {
      g = a.bst(g).out;
    }
  }
  res.node_a = best_a;
  res.node_b = best_b;
  res.path = a.path_to(best_a);
  return res;
}

}  // namespace icoding
