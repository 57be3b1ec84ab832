#include "icoding/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace icoding {

namespace {

using Tree = IncrementalSubtree;

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

Bits walk_common(const PartyInput& a, const PartyInput& b) {
  auto ca = a.root();
  auto cb = b.root();
  Bits path;
  path.reserve(a.depth());
  for (uint32_t d = 0; d < a.depth(); ++d) {
    const uint8_t bit = owner_of_depth(d) == Party::Alice ? ca->preferred() : cb->preferred();
    ca->descend(bit);
    cb->descend(bit);
    path.push_back(bit);
  }
  return path;
}

bool is_prefix(const Bits& p, const Bits& of) {
  return p.size() <= of.size() && std::equal(p.begin(), p.end(), of.begin());
}

std::unique_ptr<PartyCursor> cursor_along(const PartyInput& input, const Bits& path) {
  auto c = input.root();
  for (uint8_t b : path) c->descend(b);
  return c;
}

}  // namespace

uint32_t block_length_for(uint32_t n) {
  if (n == 0) throw std::invalid_argument("protocol depth must be positive");
  const uint64_t lg = ceil_log2(n);
  const uint64_t target = std::max<uint64_t>(1, lg * lg);
  for (uint64_t b = std::min<uint64_t>(target, n); b > 1; --b)
    if (n % b == 0) return static_cast<uint32_t>(b);
  return 1;
}

MetaLayout MetaLayout::make(uint32_t n, uint32_t beta, uint32_t C, uint64_t max_edges, bool pad_for_boosting) {
  MetaLayout m;
  m.n = n;
  m.beta = beta;
  m.hash_bits = path_hash_bits(C, n);
  m.iterations = simple_iteration_cap(max_edges);
  m.max_edges = max_edges;
  uint64_t len = m.used_length();
  if (pad_for_boosting) {
    for (;;) {
      const uint64_t lg = ceil_log2(len);
      const uint64_t t = lg * lg;
      const uint64_t padded = ceil_div(len, t) * t;
      const uint64_t lg2 = ceil_log2(padded);
      len = padded;
      if (lg2 == lg) break;
    }
  }
  if (len > UINT32_MAX) throw std::invalid_argument("inner protocol too long");
  m.length = static_cast<uint32_t>(len);
  return m;
}

BoostConfig BoostConfig::make(uint32_t n, Rate eps_prime, Rate rho, uint32_t s, double p, uint32_t C,
                              bool pad_layout) {
  if (eps_prime.num <= 0) throw std::invalid_argument("eps' must be positive");
  BoostConfig c;
  c.n = n;
  c.eps_prime = eps_prime;
  c.C = C;
  c.beta = block_length_for(n);
  const auto num = static_cast<uint64_t>(eps_prime.num);
  const auto den = static_cast<uint64_t>(eps_prime.den);
  c.meta_rounds = ceil_div(10 * den * n, num * c.beta);
  c.s_out = static_cast<uint32_t>(ceil_div(4 * uint64_t{s} * den, num));
  c.vote_floor = ceil_div(c.meta_rounds * num, 4 * den);
  c.layout = MetaLayout::make(n, c.beta, C, c.meta_rounds * s * c.beta + n, pad_layout);
  c.c_prime = static_cast<uint32_t>(ceil_div(c.layout.length, c.beta));
  c.base.rho = rho;
  c.base.s = s;
  c.base.p = p;
  c.base.block_rounds = uint64_t{c.R} * c.c_prime * c.beta;
  c.validate();
  return c;
}

void BoostConfig::validate() const {
  if (n == 0 || beta == 0 || n % beta != 0) throw std::invalid_argument("block length must divide n");
  if (!(Rate{0, 1} < eps_prime) || !(eps_prime < base.rho))
    throw std::invalid_argument("need 0 < eps' < rho, got eps' = " + eps_prime.str() + ", rho = " + base.rho.str());
  const auto num = static_cast<uint64_t>(eps_prime.num);
  const auto den = static_cast<uint64_t>(eps_prime.den);
  if (meta_rounds * beta * num < 10 * den * n) throw std::invalid_argument("too few meta-rounds: N' beta < 10 n / eps'");
  if (layout.length > uint64_t{c_prime} * beta) throw std::invalid_argument("inner protocol exceeds c' * beta rounds");
  if (base.s == 0) throw std::invalid_argument("base list size must be positive");
  const double lg = std::log2(static_cast<double>(std::max<uint32_t>(n, 2)));
  const double lhs = 2.0 * std::log2(5.0 / eps_prime.value());
  if (lhs > C * lg * lg) {
    std::ostringstream os;
    os << "failure exponent too small: 2 log(5/eps') = " << lhs << " > C log^2 n = " << C * lg * lg;
    throw std::invalid_argument(os.str());
  }
}

CursorCache::CursorCache(const PartyInput& input, const Tree& tree) : tree_(&tree) {
  cache_[Tree::kRoot] = input.root();
}

const PartyCursor& CursorCache::at(int32_t node) {
  auto it = cache_.find(node);
  if (it != cache_.end()) return *it->second;
  Bits up;
  int32_t v = node;
  for (; (it = cache_.find(v)) == cache_.end(); v = tree_->parent(v)) up.push_back(tree_->bit(v));
  auto c = it->second->clone();
  for (auto b = up.rbegin(); b != up.rend(); ++b) c->descend(*b);
  steps_ += up.size();
  auto& slot = cache_[node];
  slot = std::move(c);
  return *slot;
}

std::vector<Bits> top_leaves(const VoteTable& votes, size_t k) {
  std::vector<std::pair<uint64_t, const Bits*>> ranked;
  ranked.reserve(votes.size());
  for (const auto& [leaf, v] : votes) ranked.emplace_back(v, &leaf);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<Bits> out;
  for (size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(*ranked[i].second);
  return out;
}

uint64_t total_votes(const VoteTable& votes) {
  uint64_t t = 0;
  for (const auto& [leaf, v] : votes) t += v;
  return t;
}

SearchMode parse_search_mode(const std::string& name) {
  if (name == "simple") return SearchMode::Simple;
  if (name == "double") return SearchMode::Double;
  throw std::invalid_argument("unknown search mode '" + name + "' (simple|double)");
}

std::string search_mode_name(SearchMode m) { return m == SearchMode::Simple ? "simple" : "double"; }

OracleMetaBase::OracleMetaBase(ListDecodeGuarantee g, GarbagePolicy policy, Session& session)
    : g_(g), policy_(policy), session_(&session) {
  g_.validate();
}

Candidate OracleMetaBase::garbage(const MetaContext& ctx, Party receiver, std::mt19937_64& rng) const {
  const Tree& tree = *ctx.tree[index_of(receiver)];
  const uint32_t n = ctx.config->n;
  const uint32_t beta = ctx.config->beta;
  Candidate c;
  if (policy_ == GarbagePolicy::Hostile && rng() % 2 == 0) {
    c.node = ctx.search_node[index_of(receiver)];
  } else {
    c.node = static_cast<int32_t>(rng() % tree.node_count());
  }
  const uint32_t d = tree.depth(c.node);
  const uint32_t len = std::min(beta, n - d);
  if (policy_ != GarbagePolicy::Hostile) {
    for (uint32_t i = 0; i < len; ++i) c.block.push_back(static_cast<uint8_t>(rng() & 1u));
    return c;
  }
  // Honour the receiver everywhere, follow the sender down to a random
  // point and contradict it from there on.
  const Party sender = other(receiver);
  auto rc = ctx.cursor_at(receiver, c.node);
  auto sc = cursor_along(*ctx.input[index_of(sender)], tree.path_to(c.node));
  const uint32_t split = len == 0 ? 0 : static_cast<uint32_t>(rng() % len);
  for (uint32_t i = 0; i < len; ++i) {
    uint8_t b;
    if (owner_of_depth(d + i) == receiver) b = rc->preferred();
    else b = static_cast<uint8_t>(sc->preferred() ^ (i >= split ? 1u : 0u));
    rc->descend(b);
    sc->descend(b);
    c.block.push_back(b);
  }
  return c;
}

MetaOutcome OracleMetaBase::run(const MetaContext& ctx, std::mt19937_64& rng) {
  MetaOutcome out;
  out.rounds = g_.block_rounds;
  out.corruptions = session_->bulk(out.rounds);
  out.within = g_.rho.admits(out.corruptions, out.rounds);
  const bool keep = out.within && !(g_.p > 0.0 && std::bernoulli_distribution(g_.p)(rng));
  for (Party p : {Party::Alice, Party::Bob}) {
    auto& list = out.candidates[index_of(p)];
    Candidate truth{ctx.search_node[index_of(p)], ctx.true_block};
    if (keep) list.push_back(truth);
    out.truth_offered[index_of(p)] = keep;
    while (list.size() < g_.s) {
      if (policy_ == GarbagePolicy::Duplicate && keep) list.push_back(truth);
      else list.push_back(garbage(ctx, p, rng));
    }
    if (keep && policy_ != GarbagePolicy::Duplicate) std::shuffle(list.begin(), list.end(), rng);
  }
  return out;
}

BoostResult run_boost(const PartyInput& alice, const PartyInput& bob, const BoostConfig& config, MetaBase& base,
                      uint64_t seed, const BoostOptions& options) {
  config.validate();
  if (alice.depth() != config.n || bob.depth() != config.n)
    throw std::invalid_argument("inputs do not match the configured depth");
  BoostResult res;
  res.config = config;
  res.truth = walk_common(alice, bob);
  const uint32_t n = config.n;
  const auto index = options.search == SearchMode::Double ? Tree::Index::SearchTreeWithCodes : Tree::Index::None;
  Tree tree[2] = {Tree(n, index), Tree(n, index)};
  CursorCache cache[2] = {CursorCache(alice, tree[0]), CursorCache(bob, tree[1])};
  std::mt19937_64 rng(mix2(seed, 0xB0057));
  const uint64_t seed_mask =
      config.layout.seed_bits >= 64 ? ~uint64_t{0} : (uint64_t{1} << config.layout.seed_bits) - 1;
  const uint32_t s = base.guarantee().s;
  uint32_t common_len = 0;
  Bits exact;  // brute-force intersection of the current edge sets

  for (uint64_t i = 0; i < config.meta_rounds; ++i) {
    MetaContext ctx;
    ctx.index = i;
    ctx.seed = mix2(seed, i + 1);
    ctx.search_seed = mix64(ctx.seed) & seed_mask;
    ctx.config = &config;
    ctx.tree[0] = &tree[0];
    ctx.tree[1] = &tree[1];
    ctx.input[0] = &alice;
    ctx.input[1] = &bob;
    ctx.common = &res.truth;
    ctx.cursor_at = [&cache](Party p, int32_t node) { return cache[index_of(p)].at(node).clone(); };

    IntersectParams ip;
    ip.C = config.C;
    ip.seed = ctx.search_seed;
    ip.audit = false;
    const IntersectResult sr = options.search == SearchMode::Double ? intersect_double(tree[0], tree[1], ip)
                                                                    : intersect_simple(tree[0], tree[1], ip);
    res.search.iterations += sr.stats.iterations;
    res.search.comparisons += sr.stats.comparisons;
    res.search.bits += sr.stats.bits;
    res.search.messages += sr.stats.messages;
    res.search.alice_work += sr.stats.alice_work;
    res.search.bob_work += sr.stats.bob_work;
    res.search.max_comparison_work = std::max(res.search.max_comparison_work, sr.stats.max_comparison_work);
    res.search.collisions += sr.stats.collisions;
    ctx.search_node[0] = sr.node_a;
    ctx.search_node[1] = sr.node_b;

    if (options.audit) {
      if (!is_prefix(exact, res.truth)) ++res.prefix_violations;
      if (exact != sr.path) ++res.search_mismatches;
      common_len = static_cast<uint32_t>(exact.size());
    }

    // The noiseless extension from Alice's search endpoint.
    {
      auto ca = cache[0].at(sr.node_a).clone();
      auto cb = tree[1].path_to(sr.node_b) == sr.path ? cache[1].at(sr.node_b).clone() : cursor_along(bob, sr.path);
      const uint32_t d = static_cast<uint32_t>(sr.path.size());
      for (uint32_t e = 0; e < std::min(config.beta, n - d); ++e) {
        const uint8_t b = owner_of_depth(d + e) == Party::Alice ? ca->preferred() : cb->preferred();
        ca->descend(b);
        cb->descend(b);
        ctx.true_block.push_back(b);
      }
    }

    MetaOutcome out = base.run(ctx, rng);
    res.rounds += out.rounds;
    res.spent += out.corruptions;
    if (out.within) ++res.within_meta_rounds;

    MetaRoundLog entry;
    entry.index = i;
    entry.rounds = out.rounds;
    entry.corruptions = out.corruptions;
    entry.within = out.within;
    entry.common_before = common_len;
    entry.search_depth = static_cast<uint32_t>(sr.path.size());
    for (Party p : {Party::Alice, Party::Bob}) {
      const int pi = index_of(p);
      entry.truth_offered[pi] = out.truth_offered[pi];
      const auto& list = out.candidates[pi];
      if (list.size() > s) throw std::logic_error("base returned more than s candidates");
      std::set<int32_t> voted;
      for (const Candidate& c : list) {
        Tree& t = tree[pi];
        bool ok = c.node >= 0 && static_cast<size_t>(c.node) < t.node_count() && c.block.size() <= n - t.depth(c.node);
        std::unique_ptr<PartyCursor> cur;
        if (ok) {
          cur = cache[pi].at(c.node).clone();
          for (uint8_t b : c.block) {
            if (owner_of_depth(cur->depth()) == p && cur->preferred() != b) {
              ok = false;
              break;
            }
            cur->descend(b);
          }
        }
        if (!ok) {
          ++entry.rejected[pi];
          continue;
        }
        ++entry.accepted[pi];
        if (!c.block.empty()) {
          const int32_t end = t.add_path(c.block, c.node);
          cache[pi].put(end, std::move(cur));
        }
        if (t.depth(c.node) == n && voted.insert(c.node).second) {
          Bits leaf = t.path_to(c.node);
          if (leaf == res.truth) entry.voted_truth[pi] = true;
          ++res.votes[pi][leaf];
        }
      }
      res.accepted_blocks[pi] += entry.accepted[pi];
      res.rejected_blocks[pi] += entry.rejected[pi];
      entry.edges[pi] = tree[pi].edge_count();
      if (total_votes(res.votes[pi]) > (i + 1) * s) ++res.vote_bound_violations;
    }

    if (options.audit) {
      const uint32_t before = common_len;
      exact = brute_force_intersection(tree[0], tree[1]).path;
      common_len = static_cast<uint32_t>(exact.size());
      entry.common_after = common_len;
      if (out.within && out.truth_offered[0] && out.truth_offered[1]) {
        const bool ok = before < n ? common_len >= before + std::min(config.beta, n - before)
                                   : entry.voted_truth[0] && entry.voted_truth[1];
        if (!ok) ++res.dichotomy_violations;
      }
    }
    if (out.within && !(out.truth_offered[0] && out.truth_offered[1])) ++res.base_failures;
    if (options.keep_log) res.log.push_back(entry);
  }

  for (int p = 0; p < 2; ++p) {
    res.output[p] = top_leaves(res.votes[p], config.s_out);
    res.correct[p] = std::find(res.output[p].begin(), res.output[p].end(), res.truth) != res.output[p].end();
    auto it = res.votes[p].find(res.truth);
    res.truth_votes[p] = it == res.votes[p].end() ? 0 : it->second;
  }
  res.cursor_steps = cache[0].steps() + cache[1].steps();
  if (options.keep_trees) {
    for (int p = 0; p < 2; ++p) res.trees[p] = std::make_shared<const Tree>(std::move(tree[p]));
  }
  return res;
}

std::string BoostResult::meta_csv() const {
  std::ostringstream os;
  os << "meta_round,rounds,corruptions,rate,within,offered_a,offered_b,common_before,common_after,search_depth,"
        "voted_truth_a,voted_truth_b,accepted_a,accepted_b,rejected_a,rejected_b,edges_a,edges_b\n";
  for (const auto& e : log) {
    os << e.index << ',' << e.rounds << ',' << e.corruptions << ','
       << (e.rounds ? static_cast<double>(e.corruptions) / static_cast<double>(e.rounds) : 0.0) << ','
       << e.within << ',' << e.truth_offered[0] << ',' << e.truth_offered[1] << ',' << e.common_before << ','
       << e.common_after << ',' << e.search_depth << ',' << e.voted_truth[0] << ',' << e.voted_truth[1] << ','
       << e.accepted[0] << ',' << e.accepted[1] << ',' << e.rejected[0] << ',' << e.rejected[1] << ','
       << e.edges[0] << ',' << e.edges[1] << '\n';
  }
  return os.str();
}

std::string BoostResult::ranking_csv(size_t k) const {
  std::ostringstream os;
  os << "party,rank,leaf,votes,is_truth\n";
  for (int p = 0; p < 2; ++p) {
    const auto ranked = top_leaves(votes[p], k);
    for (size_t r = 0; r < ranked.size(); ++r) {
      os << (p == 0 ? "A" : "B") << ',' << r + 1 << ',' << bits_to_string(ranked[r]) << ','
         << votes[p].at(ranked[r]) << ',' << (ranked[r] == truth) << '\n';
    }
  }
  return os.str();
}

BoostRun run_boost_oracle(const ProtocolInstance& instance, const BoostConfig& config, GarbagePolicy policy,
                          Adversary& adversary, Rate rate, uint64_t seed, const BoostOptions& options) {
  ErrorBudget budget{config.total_rounds(), rate, 0};
  Session session(nullptr, nullptr, ScheduleMode::NonAdaptive, alternating_sender, budget, &adversary,
                  TraceLevel::None);
  OracleMetaBase base(config.base, policy, session);
  auto a = instance.party(Party::Alice);
  auto b = instance.party(Party::Bob);
  BoostRun run;
  run.result = run_boost(*a, *b, config, base, seed, options);
  run.limit = budget.limit();
  run.spent = session.budget().spent;
  return run;
}

}  // namespace icoding
