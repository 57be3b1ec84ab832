#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "icoding/boosting.hpp"

namespace icoding {

// One meta-round's inner protocol in canonical form, for fixed edge sets:
// Alice's seed, the hashed binary search of the simple tree-intersection
// protocol, her final hash, then the block extending each party's search
// endpoint (shifted by one dummy position when the endpoint depth is
// odd). Every other position is a dummy whose preferred edge is 0.
class MetaProtocol {
 public:
  using CursorSource = std::function<std::unique_ptr<PartyCursor>(Party, int32_t)>;

  MetaProtocol(const MetaLayout& layout, const IncrementalSubtree& alice_tree, const IncrementalSubtree& bob_tree,
               CursorSource source, uint64_t alice_seed);

  const MetaLayout& layout() const;
  std::unique_ptr<PartyInput> party(Party p) const;
  // Replays |transcript| from |receiver|'s side; nullopt when Bob cannot
  // place Alice's final hash or the transcript has the wrong length.
  std::optional<Candidate> decode(Party receiver, const Bits& transcript) const;
  // Distinct seeds for which Bob's hash table was built.
  size_t tables_built() const;

  struct Shared;

 private:
  std::shared_ptr<Shared> shared_;
};

// Audit of one boosted level used as a base: how often it was called
// inside its own guarantee and whether the truth survived there.
struct LevelAudit {
  uint64_t calls = 0;
  uint64_t within = 0;
  uint64_t missed_within = 0;  // within the guarantee, truth absent from a list
  uint64_t missed_outside = 0;
  uint64_t undecodable = 0;
  size_t max_list = 0;
  uint64_t inner_dichotomy_violations = 0;
  uint64_t inner_prefix_violations = 0;
  uint64_t inner_vote_bound_violations = 0;
};

// A boosted scheme for the next level's inner protocol.
class BoostedMetaBase final : public MetaBase {
 public:
  BoostedMetaBase(const BoostConfig& inner, MetaBase& inner_base, const BoostOptions& options);
  ListDecodeGuarantee guarantee() const override;
  MetaOutcome run(const MetaContext& ctx, std::mt19937_64& rng) override;
  std::string name() const override { return "boosted"; }
  const LevelAudit& audit() const { return audit_; }

 private:
  BoostConfig inner_;
  MetaBase* inner_base_;
  BoostOptions options_;
  LevelAudit audit_;
};

struct RecursiveBoostConfig {
  // levels[0] runs over the oracle; levels.back() runs on the instance.
  std::vector<BoostConfig> levels;

  static RecursiveBoostConfig make(uint32_t n, uint32_t depth, Rate eps_prime, Rate rho0, uint32_t s0,
                                   uint32_t C = 3);
  Rate guaranteed_rate() const { return levels.back().guaranteed_rate(); }
  uint32_t output_size() const { return levels.back().s_out; }
  uint64_t total_rounds() const { return levels.back().total_rounds(); }
};

struct RecursiveRun {
  BoostResult top;
  std::vector<LevelAudit> audits;  // audits[k]: level k acting as a base
  uint64_t limit = 0;
  uint64_t spent = 0;
  bool budget_ok() const { return spent <= limit; }
};

RecursiveRun run_recursive_boost(const ProtocolInstance& instance, const RecursiveBoostConfig& config,
                                 GarbagePolicy policy, Adversary& adversary, Rate rate, uint64_t seed,
                                 const BoostOptions& options = {});

}  // namespace icoding
