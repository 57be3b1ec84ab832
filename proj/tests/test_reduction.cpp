#include "doctest.h"
#include "icoding/reduction.hpp"

#include <set>

using namespace icoding;

namespace {

const Rate kEps(1, 10);

OracleScheme oracle_for(const ProtocolInstance& inst, const ReductionConfig& cfg, GarbagePolicy policy,
                        uint32_t s = 3) {
  return OracleScheme(inst, ListDecodeGuarantee{cfg.inner_rate(), s, 0.0, cfg.block_rounds}, policy);
}

// The path a party would walk given edge set |edges|, found by testing every
// leaf: a leaf qualifies when it follows |own| at own depths and, at each
// other depth, |edges| holds exactly the leaf's edge out of that node.
Bits leaf_scan(const SubtreeEdgeSet& edges, const ProtocolInstance& inst, Party own) {
  const uint32_t n = inst.depth();
  std::vector<Bits> hits;
  for (uint64_t leaf = 0; leaf < (1ull << n); ++leaf) {
    Bits path;
    for (uint32_t d = 0; d < n; ++d) path.push_back(static_cast<uint8_t>((leaf >> (n - 1 - d)) & 1));
    bool ok = true;
    NodeKey key;
    Bits prefix;
    for (uint32_t d = 0; d < n && ok; ++d) {
      if (owner_of_depth(d) == own) {
        ok = inst.preferred(key) == path[d];
      } else {
        int32_t node = edges.find(prefix);
        if (node == SubtreeEdgeSet::kNone) {
          ok = false;
        } else {
          bool has0 = edges.child(node, 0) != SubtreeEdgeSet::kNone;
          bool has1 = edges.child(node, 1) != SubtreeEdgeSet::kNone;
          ok = has0 != has1 && (path[d] ? has1 : has0);
        }
      }
      prefix.push_back(path[d]);
      key = key.child(path[d]);
    }
    if (ok) hits.push_back(path);
  }
  REQUIRE(hits.size() <= 1);
  return hits.empty() ? Bits{} : hits.front();
}

}  // namespace

TEST_CASE("block counts and round totals at eps = 1/10") {
  auto na = ReductionConfig::make(Variant::NonAdaptive14, kEps, 64, 3);
  CHECK(na.b1 == 10);
  CHECK(na.b2 == 0);
  CHECK(na.n_c == 20);
  CHECK(na.block_rounds == 40);
  CHECK(na.total_rounds == 400);
  CHECK(na.edge_bound == 10u * 3 * 64);

  auto ad = ReductionConfig::make(Variant::Adaptive27, kEps, 64, 3);
  CHECK(ad.b1 == 30);
  CHECK(ad.b2 == 10);
  CHECK(ad.total_rounds == 35 * ad.block_rounds);

  auto os = ReductionConfig::make(Variant::OneSided13, kEps, 64, 3);
  CHECK(os.b1 == 10);
  CHECK(os.b2 == 10);
  CHECK(os.total_rounds == 15 * os.block_rounds);

  auto lr = ReductionConfig::make(Variant::ListReduce, kEps, 64, 3);
  CHECK(lr.list_L == 10);
  CHECK(lr.b1 * lr.list_L == 100);

  CHECK(na.guaranteed_rate() == Rate(1, 20));
  CHECK(ad.guaranteed_rate() == Rate(3, 35));
  CHECK(os.guaranteed_rate() == Rate(2, 15));
  CHECK(lr.guaranteed_rate() == Rate(3, 10));
  CHECK(ErrorBudget{ad.total_rounds, ad.guaranteed_rate()}.limit() == 120);
  CHECK(ErrorBudget{os.total_rounds, os.guaranteed_rate()}.limit() == 80);

  CHECK_THROWS(ReductionConfig::make(Variant::NonAdaptive14, Rate(1, 4), 64, 3));
  CHECK_THROWS(ReductionConfig::make(Variant::NonAdaptive14, kEps, 7, 3));
  CHECK(parse_variant("onesided13") == Variant::OneSided13);
  CHECK_THROWS(parse_variant("nope"));
}

TEST_CASE("threshold comparison is exact and strict") {
  auto c = ReductionConfig::make(Variant::Adaptive27, kEps, 8, 1);
  // 1/eps = 10 blocks worth = 200 units of 1/20.
  CHECK_FALSE(c.above_threshold(200));
  CHECK(c.above_threshold(201));
  CHECK(c.at_least_multiple(400, 2));
  CHECK_FALSE(c.at_least_multiple(399, 2));
}

TEST_CASE("layout of joint and exclusive rounds") {
  auto c = ReductionConfig::make(Variant::OneSided13, kEps, 8, 1);
  auto s = layout(c, 0);
  CHECK_FALSE(s.exclusive);
  CHECK(s.joint_sender == Party::Alice);
  CHECK(s.slot == 0);
  s = layout(c, 41);
  CHECK(s.block == 1);
  CHECK(s.slot == 0);
  CHECK(s.joint_sender == Party::Bob);
  CHECK(s.block_start == 40);
  s = layout(c, 400 + 25);
  CHECK(s.exclusive);
  CHECK(s.block == 1);
  CHECK(s.slot == 5);
  CHECK(s.block_start == 420);
}

TEST_CASE("confidence formula") {
  CHECK(confidence_units(0, 20) == 20);   // c = 1
  CHECK(confidence_units(10, 20) == 0);   // midpoint
  CHECK(confidence_units(20, 20) == -20); // extreme
  CHECK(confidence_units(9, 20) == 2);
}

TEST_CASE("ledger aggregates") {
  ConfidenceLedger led(20);
  Bits p{0, 1}, q{1, 1};
  led.add(BlockRecord{true, 0, 20, p});
  led.add(BlockRecord{true, 5, 10, q});
  led.add(BlockRecord{true, 9, 2, {}});
  led.add(BlockRecord{false, 0, 0, {}});
  CHECK(led.total() == 32);
  CHECK(led.of(p) == 20);
  CHECK(led.of_empty() == 2);
  REQUIRE(led.tau_max());
  CHECK(*led.tau_max() == p);
  CHECK(led.c_prime() == 20 - (32 - 20 - 2));
  CHECK(led.c_double_prime() == 2 * 22 - 32);

  ConfidenceLedger tie(20);
  tie.add(BlockRecord{true, 0, 20, q});
  tie.add(BlockRecord{true, 0, 20, p});
  CHECK(*tie.tau_max() == p);
  CHECK_FALSE(ConfidenceLedger(20).tau_max());
}

TEST_CASE("block confidence on exact, noisy and hopeless words") {
  auto cfg = ReductionConfig::make(Variant::NonAdaptive14, kEps, 8, 1);
  auto code = cfg.make_code();
  auto inst = ProtocolInstance::random(8, 3);
  SubtreeEdgeSet set;
  set.add_path(common_path(inst));
  auto word = code.encode_bits(subtree_encode(set, cfg.edge_bound));
  auto bc = block_confidence(word, code, cfg.edge_bound, 8);
  REQUIRE(bc.edges);
  CHECK(*bc.edges == set);
  CHECK(bc.c_units == 20);

  const uint32_t m = code.m();
  for (uint32_t j = 0; j < 9; ++j) word[j * m] = (word[j * m] + 1) % kMersenne61;
  bc = block_confidence(word, code, cfg.edge_bound, 8);
  REQUIRE(bc.edges);
  CHECK(bc.distance == 9);
  CHECK(bc.c_units == 2);

  std::mt19937_64 rng(1);
  for (auto& w : word) w = rng() % kMersenne61;
  bc = block_confidence(word, code, cfg.edge_bound, 8);
  CHECK_FALSE(bc.edges);
  CHECK(bc.c_units == 0);
}

TEST_CASE("derive_path examples and leaf-scan cross-check") {
  auto inst = ProtocolInstance::random(6, 11);
  auto alice = inst.party(Party::Alice);
  const Bits truth = common_path(inst);

  SubtreeEdgeSet bob_edges;
  bob_edges.add_path(truth);
  CHECK(derive_path(&bob_edges, *alice) == truth);
  SubtreeEdgeSet none;
  CHECK(derive_path(&none, *alice).empty());
  CHECK(derive_path(nullptr, *alice).empty());
  SubtreeEdgeSet half;
  half.add_path(Bits(truth.begin(), truth.begin() + 3));
  CHECK(derive_path(&half, *alice).empty());
  CHECK(leaf_scan(half, inst, Party::Alice).empty());

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 400; ++trial) {
    auto ti = ProtocolInstance::random(6, rng());
    SubtreeEdgeSet e;
    int paths = static_cast<int>(rng() % 4);
    for (int k = 0; k < paths; ++k) {
      Bits p;
      uint32_t len = 1 + static_cast<uint32_t>(rng() % 6);
      for (uint32_t d = 0; d < len; ++d) p.push_back(static_cast<uint8_t>(rng() & 1));
      e.add_path(p);
    }
    for (Party who : {Party::Alice, Party::Bob}) {
      auto in = ti.party(who);
      CHECK(derive_path(&e, *in) == leaf_scan(e, ti, who));
    }
  }
}

TEST_CASE("null adversary: every confidence is one and all variants decode") {
  auto inst = ProtocolInstance::random(16, 42);
  for (Variant v : {Variant::NonAdaptive14, Variant::Adaptive27, Variant::OneSided13, Variant::ListReduce}) {
    auto cfg = ReductionConfig::make(v, kEps, 16, 3);
    auto inner = oracle_for(inst, cfg, GarbagePolicy::Hostile);
    NullAdversary adv;
    auto r = run_reduction(cfg, inst, inner, adv, Rate(0, 1), 7);
    CAPTURE(variant_name(v));
    CHECK(r.correct[0]);
    CHECK(r.correct[1]);
    CHECK(r.rounds == cfg.total_rounds);
    CHECK(r.esets_respect_preferences);
    for (int i = 0; i < 2; ++i) {
      // Block one carries the empty E-set, so it counts toward c(empty).
      for (size_t b = 0; b < cfg.b1; ++b) CHECK(r.ledger[i].blocks()[b].c_units == 20);
      CHECK(r.c_prime[i] > 0);
    }
    if (v == Variant::Adaptive27) {
      CHECK(r.safe[0]);
      CHECK(r.safe[1]);
      CHECK(r.c_double_prime[0] == 20 * 30);
    }
    if (v == Variant::ListReduce) {
      REQUIRE_FALSE(r.lists[0].empty());
      CHECK(r.lists[0].front() == r.truth);
      CHECK(r.lists[1].front() == r.truth);
    }
  }
}

TEST_CASE("guaranteed-rate spot checks") {
  std::mt19937_64 rng(99);
  for (Variant v : {Variant::NonAdaptive14, Variant::Adaptive27, Variant::OneSided13, Variant::ListReduce}) {
    auto cfg = ReductionConfig::make(v, kEps, 32, 3);
    Rate rate = cfg.guaranteed_rate();
    for (int t = 0; t < 20; ++t) {
      auto inst = ProtocolInstance::random(32, rng());
      auto inner = oracle_for(inst, cfg, GarbagePolicy::Hostile);
      for (int a = 0; a < 3; ++a) {
        std::unique_ptr<Adversary> adv;
        if (a == 0) adv = std::make_unique<UniformAdversary>(rate.value() * 1.5, rng());
        if (a == 1) adv = std::make_unique<BlockFrontAdversary>(cfg.block_rounds, rng());
        if (a == 2) adv = std::make_unique<AntiMajorityAdversary>(cfg, inst, AntiMajorityAdversary::Target::Both, rng());
        auto r = run_reduction(cfg, inst, inner, *adv, rate, rng());
        CAPTURE(variant_name(v));
        CAPTURE(adv->name());
        CHECK(r.budget_ok());
        CHECK(r.correct[0]);
        if (v != Variant::OneSided13) CHECK(r.correct[1]);
        if (v != Variant::ListReduce) CHECK(r.c_prime[0] > 0);
        if (v == Variant::Adaptive27) {
          CHECK((r.safe[0] || r.safe[1]));
          CHECK(cfg.at_least_multiple(r.c_double_prime[0] + r.c_double_prime[1], 2));
        }
        if (v == Variant::ListReduce) CHECK(r.lists[0].size() <= cfg.b1 * cfg.list_L);
        for (int i = 0; i < 2; ++i)
          for (const auto& b : r.ledger[i].blocks()) CHECK(std::abs(b.c_units) <= 20);
      }
    }
  }
}

TEST_CASE("anti-majority breaks nonadaptive14 at rate 0.30") {
  auto cfg = ReductionConfig::make(Variant::NonAdaptive14, kEps, 32, 3);
  int failures = 0;
  for (uint64_t t = 0; t < 20; ++t) {
    auto inst = ProtocolInstance::random(32, 1000 + t);
    auto inner = oracle_for(inst, cfg, GarbagePolicy::Hostile);
    AntiMajorityAdversary adv(cfg, inst, AntiMajorityAdversary::Target::Alice, t);
    auto r = run_reduction(cfg, inst, inner, adv, Rate(3, 10), t);
    CHECK(r.budget_ok());
    if (!r.correct[0]) {
      ++failures;
      CHECK(r.output[0] == adv.fake_path(Party::Alice));
    }
  }
  CHECK(failures > 0);
}

TEST_CASE("anti-majority fake path diverges at the sender's first level") {
  auto inst = ProtocolInstance::random(8, 77);
  auto cfg = ReductionConfig::make(Variant::NonAdaptive14, kEps, 8, 1);
  AntiMajorityAdversary adv(cfg, inst, AntiMajorityAdversary::Target::Both, 1);
  Bits truth = common_path(inst);
  Bits fa = adv.fake_path(Party::Alice), fb = adv.fake_path(Party::Bob);
  CHECK(fa[0] == truth[0]);
  CHECK(fa[1] != truth[1]);
  CHECK(fb[0] != truth[0]);
  CHECK(consistent_with(*inst.party(Party::Alice), fa));
  CHECK(consistent_with(*inst.party(Party::Bob), fb));
  CHECK(parse_target("both") == AntiMajorityAdversary::Target::Both);
}
