#include "doctest.h"
#include "icoding/boosting.hpp"
#include "icoding/meta_protocol.hpp"
#include "support/random_trees.hpp"

#include <cmath>

using namespace icoding;
using Tree = IncrementalSubtree;

namespace {

// Independent restatements of the parameter arithmetic.
uint64_t lg_ceil(uint64_t x) {
  uint64_t k = 0;
  while ((uint64_t{1} << k) < x) ++k;
  return k;
}

uint32_t beta_oracle(uint32_t n) {
  const uint64_t target = lg_ceil(n) * lg_ceil(n);
  uint32_t best = 1;
  for (uint32_t d = 1; d <= n; ++d)
    if (n % d == 0 && d <= target) best = d;
  return best;
}

uint32_t iterations_oracle(uint64_t m) {
  // floor(log_{1.5} m) by repeated multiplication, then the cap used by
  // the deterministic search.
  uint32_t h = 0;
  double x = 1.5;
  while (x <= static_cast<double>(m)) {
    ++h;
    x *= 1.5;
  }
  return std::max<uint32_t>(h, 1);
}

Bits walk(const ProtocolInstance& inst, const Bits& prefix, uint32_t len) {
  auto a = inst.party(Party::Alice)->root();
  auto b = inst.party(Party::Bob)->root();
  for (uint8_t x : prefix) {
    a->descend(x);
    b->descend(x);
  }
  Bits out;
  for (uint32_t i = 0; i < len; ++i) {
    const uint8_t x = owner_of_depth(a->depth()) == Party::Alice ? a->preferred() : b->preferred();
    a->descend(x);
    b->descend(x);
    out.push_back(x);
  }
  return out;
}

// Every edge of |t| at a depth owned by |p| is p's preferred edge.
bool respects(const Tree& t, const ProtocolInstance& inst, Party p) {
  auto input = inst.party(p);
  std::vector<std::pair<int32_t, std::unique_ptr<PartyCursor>>> stack;
  stack.emplace_back(Tree::kRoot, input->root());
  while (!stack.empty()) {
    auto [v, c] = std::move(stack.back());
    stack.pop_back();
    for (uint8_t b = 0; b < 2; ++b) {
      const int32_t w = t.child(v, b);
      if (w == Tree::kNone) continue;
      if (owner_of_depth(t.depth(v)) == p && c->preferred() != b) return false;
      auto cc = c->clone();
      cc->descend(b);
      stack.emplace_back(w, std::move(cc));
    }
  }
  return true;
}

}  // namespace

TEST_CASE("block length is the largest small divisor") {
  for (uint32_t n = 1; n <= 3000; ++n) REQUIRE(block_length_for(n) == beta_oracle(n));
  CHECK(block_length_for(1024) == 64);
  CHECK(block_length_for(1815) == 121);
  CHECK(block_length_for(16) == 16);
  CHECK(block_length_for(17) == 17);
  CHECK(block_length_for(1031) == 1);
  CHECK_THROWS_AS(block_length_for(0), std::invalid_argument);
}

TEST_CASE("single level parameters at n = 1024") {
  const auto c = BoostConfig::make(1024, Rate{1, 10}, Rate{9, 20}, 3, 0.0);
  CHECK(c.beta == 64);
  CHECK(c.meta_rounds == 1600);
  CHECK(c.s_out == 120);
  CHECK(c.vote_floor == 40);
  CHECK(c.guaranteed_rate() == Rate{7, 20});
  CHECK(c.meta_rounds * c.beta * 1 >= 10 * 10 * 1024u);

  const uint64_t m = 1600ull * 3 * 64 + 1024;
  CHECK(c.layout.max_edges == m);
  CHECK(c.layout.hash_bits == 2 * 3 * 10);
  CHECK(c.layout.iterations == simple_iteration_cap(m));
  CHECK(c.layout.iterations >= iterations_oracle(m));
  const uint64_t len = 2 * 32 + uint64_t{c.layout.iterations} * 2 * (60 + 1) + 2 * 60 + 64 + 2;
  CHECK(c.layout.length == len);
  CHECK(c.c_prime == (len + 63) / 64);
  CHECK(c.base.block_rounds == uint64_t{c.c_prime} * 64);
  CHECK(c.layout.length <= uint64_t{c.c_prime} * c.beta);
}

TEST_CASE("frozen layout at n = 1024") {
  const auto c = BoostConfig::make(1024, Rate{1, 10}, Rate{9, 20}, 3, 0.0);
  CHECK(c.layout.iterations == 36);
  CHECK(c.layout.length == 4642);
  CHECK(c.c_prime == 73);
  CHECK(c.base.block_rounds == 4672);
  CHECK(c.total_rounds() == 1600ull * 4672);
}

TEST_CASE("padding makes the next level's block length exact") {
  for (uint32_t n : {16u, 64u, 200u, 1024u}) {
    const auto m = MetaLayout::make(n, block_length_for(n), 3, 5000, true);
    CHECK(m.length >= m.used_length());
    const uint64_t t = lg_ceil(m.length) * lg_ceil(m.length);
    CHECK(m.length % t == 0);
    CHECK(block_length_for(m.length) == t);
  }
}

TEST_CASE("config validation") {
  auto c = BoostConfig::make(256, Rate{1, 10}, Rate{9, 20}, 3, 0.0);
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.meta_rounds -= 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.beta = 7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.c_prime -= 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.base.s = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(BoostConfig::make(256, Rate{1, 2}, Rate{9, 20}, 3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(BoostConfig::make(256, Rate{0, 1}, Rate{9, 20}, 3, 0.0), std::invalid_argument);
  // 2 log2(50) is about 11.3, log2(4)^2 = 4.
  CHECK_THROWS_AS(BoostConfig::make(4, Rate{1, 10}, Rate{9, 20}, 3, 0.0, 1), std::invalid_argument);
  CHECK_NOTHROW(BoostConfig::make(4, Rate{1, 10}, Rate{9, 20}, 3, 0.0, 3));
}

TEST_CASE("ranking breaks ties lexicographically") {
  VoteTable v;
  v[Bits{1, 1}] = 3;
  v[Bits{0, 1}] = 5;
  v[Bits{1, 0}] = 5;
  v[Bits{0, 0}] = 1;
  const auto top = top_leaves(v, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == Bits{0, 1});
  CHECK(top[1] == Bits{1, 0});
  CHECK(top[2] == Bits{1, 1});
  CHECK(total_votes(v) == 14);
  CHECK(top_leaves(v, 10).size() == 4);
}

TEST_CASE("noiseless run: n / beta rounds of progress, then a vote every round") {
  for (auto policy : {GarbagePolicy::Duplicate, GarbagePolicy::Random}) {
    const auto c = BoostConfig::make(256, Rate{1, 10}, Rate{9, 20}, 3, 0.0);
    const auto inst = ProtocolInstance::random(256, 5);
    NullAdversary adv;
    BoostOptions o;
    o.keep_log = true;
    const auto run = run_boost_oracle(inst, c, policy, adv, Rate{0, 1}, 9, o);
    const auto& r = run.result;
    const uint64_t progress_rounds = 256 / c.beta;
    CHECK(r.truth == common_path(inst));
    CHECK(r.both_correct());
    CHECK(r.truth_votes[0] == c.meta_rounds - progress_rounds);
    CHECK(r.truth_votes[1] == c.meta_rounds - progress_rounds);
    if (policy == GarbagePolicy::Duplicate) CHECK(total_votes(r.votes[0]) == r.truth_votes[0]);
    // Random blocks mostly contradict the receiver somewhere.
    if (policy == GarbagePolicy::Random) CHECK(r.rejected_blocks[0] > 0);
    CHECK(r.output[0].front() == r.truth);
    CHECK(r.dichotomy_violations == 0);
    CHECK(r.prefix_violations == 0);
    CHECK(r.search_mismatches == 0);
    CHECK(r.base_failures == 0);
    CHECK(r.within_meta_rounds == c.meta_rounds);
    CHECK(run.spent == 0);
    REQUIRE(r.log.size() == c.meta_rounds);
    for (uint64_t i = 0; i < progress_rounds; ++i) CHECK(r.log[i].common_after == (i + 1) * c.beta);
    CHECK_FALSE(r.log[progress_rounds - 1].voted_truth[0]);
    CHECK(r.log[progress_rounds].voted_truth[0]);
  }
}

TEST_CASE("csv outputs") {
  const auto c = BoostConfig::make(64, Rate{1, 10}, Rate{9, 20}, 2, 0.0);
  const auto inst = ProtocolInstance::random(64, 2);
  NullAdversary adv;
  BoostOptions o;
  o.keep_log = true;
  const auto r = run_boost_oracle(inst, c, GarbagePolicy::Random, adv, Rate{0, 1}, 3, o).result;
  const std::string meta = r.meta_csv();
  CHECK(meta.rfind("meta_round,rounds,corruptions,rate,within,", 0) == 0);
  CHECK(static_cast<uint64_t>(std::count(meta.begin(), meta.end(), '\n')) == c.meta_rounds + 1);
  const std::string rank = r.ranking_csv(1);
  CHECK(rank.find("A,1," + bits_to_string(r.truth) + ",") != std::string::npos);
  CHECK(rank.find("B,1," + bits_to_string(r.truth) + ",") != std::string::npos);
}

TEST_CASE("uniform noise below the guarantee") {
  const auto c = BoostConfig::make(128, Rate{1, 10}, Rate{9, 20}, 3, 0.0);
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = ProtocolInstance::random(128, 40 + seed);
    UniformAdversary adv(0.3, 70 + seed);
    const auto run = run_boost_oracle(inst, c, GarbagePolicy::Random, adv, Rate{3, 10}, seed);
    const auto& r = run.result;
    CHECK(run.budget_ok());
    CHECK(r.both_correct());
    CHECK(r.truth_votes[0] >= c.vote_floor);
    CHECK(r.truth_votes[1] >= c.vote_floor);
    CHECK(r.dichotomy_violations == 0);
    CHECK(r.prefix_violations == 0);
    CHECK(r.vote_bound_violations == 0);
    CHECK(r.output[0].size() <= c.s_out);
  }
}

TEST_CASE("double search gives the same trajectory without noise") {
  const auto c = BoostConfig::make(256, Rate{1, 10}, Rate{9, 20}, 3, 0.0);
  const auto inst = ProtocolInstance::random(256, 8);
  NullAdversary adv;
  BoostOptions o;
  o.search = SearchMode::Double;
  const auto r = run_boost_oracle(inst, c, GarbagePolicy::Duplicate, adv, Rate{0, 1}, 4, o).result;
  CHECK(r.both_correct());
  CHECK(r.truth_votes[0] == c.meta_rounds - 256 / c.beta);
  CHECK(r.search_mismatches == 0);
  CHECK(parse_search_mode("double") == SearchMode::Double);
  CHECK(search_mode_name(SearchMode::Simple) == "simple");
  CHECK_THROWS_AS(parse_search_mode("fast"), std::invalid_argument);
}

TEST_CASE("hostile garbage above the guarantee keeps the edge sets honest") {
  const auto c = BoostConfig::make(32, Rate{1, 10}, Rate{9, 20}, 3, 0.0);
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = ProtocolInstance::random(32, 90 + seed);
    BurstAdversary adv(seed, StrategyWindow{c.total_rounds() / 4});
    BoostOptions o;
    o.keep_trees = true;
    const auto run = run_boost_oracle(inst, c, GarbagePolicy::Hostile, adv, Rate{3, 5}, seed, o);
    const auto& r = run.result;
    CHECK(run.budget_ok());
    CHECK(r.rejected_blocks[0] == 0);
    CHECK(r.accepted_blocks[0] == c.meta_rounds * 3);
    REQUIRE(r.trees[0]);
    CHECK(respects(*r.trees[0], inst, Party::Alice));
    CHECK(respects(*r.trees[1], inst, Party::Bob));
    CHECK(r.prefix_violations == 0);
    CHECK(r.search_mismatches == 0);
    CHECK(r.vote_bound_violations == 0);
    CHECK(r.dichotomy_violations == 0);
    CHECK(r.output[0].size() <= c.s_out);
    for (const auto& [leaf, v] : r.votes[0]) CHECK(consistent_with(*inst.party(Party::Alice), leaf));
  }
}

TEST_CASE("base failures are counted") {
  auto c = BoostConfig::make(64, Rate{1, 10}, Rate{9, 20}, 3, 0.5);
  const auto inst = ProtocolInstance::random(64, 12);
  NullAdversary adv;
  const auto r = run_boost_oracle(inst, c, GarbagePolicy::Random, adv, Rate{0, 1}, 6).result;
  CHECK(r.base_failures > c.meta_rounds / 4);
  CHECK(r.base_failures < 3 * c.meta_rounds / 4);
  CHECK(r.dichotomy_violations == 0);
}

TEST_CASE("inner protocol decodes to the search endpoint and true block") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const uint32_t n = 48;
    const auto inst = ProtocolInstance::random(n, 300 + static_cast<uint64_t>(trial));
    auto pair = testing::promise_pair(60, n, 30, rng, Tree::Index::None);
    const Tree& ta = pair.first;
    const Tree& tb = pair.second;
    const MetaLayout layout = MetaLayout::make(n, block_length_for(n), 3, 400, false);
    auto a = inst.party(Party::Alice);
    auto b = inst.party(Party::Bob);
    MetaProtocol::CursorSource source = [&](Party p, int32_t node) {
      const Tree& t = p == Party::Alice ? ta : tb;
      auto c = (p == Party::Alice ? a : b)->root();
      for (uint8_t x : t.path_to(node)) c->descend(x);
      return c;
    };
    const uint64_t seed = rng() & 0xFFFFFFFFu;
    MetaProtocol pi(layout, ta, tb, source, seed);

    IntersectParams ip;
    ip.C = 3;
    ip.seed = seed;
    const auto sr = intersect_simple(ta, tb, ip);
    const uint32_t d = static_cast<uint32_t>(sr.path.size());
    const Bits block = walk(inst, sr.path, std::min(layout.beta, n - d));

    auto pa = pi.party(Party::Alice);
    auto pb = pi.party(Party::Bob);
    REQUIRE(pa->depth() == layout.length);
    Bits transcript;
    auto ca = pa->root();
    auto cb = pb->root();
    for (uint32_t t = 0; t < layout.length; ++t) {
      const uint8_t x = owner_of_depth(t) == Party::Alice ? ca->preferred() : cb->preferred();
      ca->descend(x);
      cb->descend(x);
      transcript.push_back(x);
    }
    for (Party p : {Party::Alice, Party::Bob}) {
      const auto got = pi.decode(p, transcript);
      REQUIRE(got.has_value());
      CHECK(got->node == (p == Party::Alice ? sr.node_a : sr.node_b));
      CHECK(got->block == block);
    }
    CHECK_FALSE(pi.decode(Party::Bob, Bits(layout.length - 1, 0)).has_value());
  }
}

TEST_CASE("recursive parameters") {
  const auto rc = RecursiveBoostConfig::make(16, 2, Rate{1, 8}, Rate{9, 20}, 3);
  REQUIRE(rc.levels.size() == 2);
  const auto& top = rc.levels[1];
  const auto& low = rc.levels[0];
  CHECK(top.n == 16);
  CHECK(top.beta == 16);
  CHECK(top.meta_rounds == 80);
  CHECK(top.base.rho == Rate{13, 40});
  CHECK(top.base.s == 96);
  CHECK(top.s_out == 3072);
  CHECK(low.n == top.layout.length);
  CHECK(low.n == 1815);
  CHECK(low.beta == 121);
  CHECK(low.meta_rounds == 1200);
  CHECK(low.base.rho == Rate{9, 20});
  CHECK(low.base.s == 3);
  CHECK(low.s_out == 96);
  CHECK(top.base.block_rounds == low.total_rounds());
  CHECK(rc.guaranteed_rate() == Rate{1, 5});
  CHECK(rc.output_size() == 3072);
  CHECK(rc.total_rounds() == 80ull * low.total_rounds());
  CHECK_THROWS_AS(RecursiveBoostConfig::make(16, 0, Rate{1, 8}, Rate{9, 20}, 3), std::invalid_argument);
}

TEST_CASE("two-level boosting recovers the path") {
  // eps' = 1/5 keeps the inner level short: rates 0.45, 0.25, guarantee 0.05.
  const auto rc = RecursiveBoostConfig::make(8, 2, Rate{1, 5}, Rate{9, 20}, 3);
  const Rate g = rc.guaranteed_rate();
  CHECK(g == Rate{1, 20});
  for (uint64_t seed = 0; seed < 2; ++seed) {
    const auto inst = ProtocolInstance::random(8, 500 + seed);
    UniformAdversary adv(g.value(), 10 + seed);
    const auto run = run_recursive_boost(inst, rc, GarbagePolicy::Random, adv, g, seed);
    CHECK(run.budget_ok());
    CHECK(run.top.both_correct());
    CHECK(run.top.dichotomy_violations == 0);
    REQUIRE(run.audits.size() == 1);
    CHECK(run.audits[0].calls == rc.levels[1].meta_rounds);
    CHECK(run.audits[0].missed_within == 0);
    CHECK(run.audits[0].max_list <= rc.levels[0].s_out);
    CHECK(run.audits[0].inner_dichotomy_violations == 0);
  }
}
