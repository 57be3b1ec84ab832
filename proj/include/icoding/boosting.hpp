#pragma once

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "icoding/base_decoders.hpp"
#include "icoding/channel.hpp"
#include "icoding/intersect.hpp"
#include "icoding/subtree.hpp"
#include "icoding/tree.hpp"

namespace icoding {

// Largest divisor of n not exceeding ceil(log2 n)^2.
uint32_t block_length_for(uint32_t n);

// Round layout of one meta-round's inner protocol: the seed, the hashed
// binary search (a fixed number of query/answer iterations), Alice's final
// hash and the extension block. Alice owns the even positions.
struct MetaLayout {
  uint32_t n = 0;          // depth of the protocol being boosted
  uint32_t beta = 0;       // extension block length
  uint32_t seed_bits = 32;
  uint32_t hash_bits = 0;  // L
  uint32_t iterations = 0;
  uint64_t max_edges = 0;  // tree size the iteration count is sized for
  uint32_t length = 0;     // total positions, padding included

  static MetaLayout make(uint32_t n, uint32_t beta, uint32_t C, uint64_t max_edges, bool pad_for_boosting);
  uint32_t search_start() const { return 2 * seed_bits; }
  uint32_t iteration_start(uint32_t k) const { return search_start() + k * 2 * (hash_bits + 1); }
  uint32_t final_start() const { return iteration_start(iterations); }
  uint32_t extension_start() const { return final_start() + 2 * hash_bits; }
  uint32_t used_length() const { return extension_start() + beta + 2; }
};

struct BoostConfig {
  uint32_t n = 0;
  Rate eps_prime{1, 10};
  uint32_t C = 3;
  uint32_t R = 1;
  uint32_t beta = 0;
  uint64_t meta_rounds = 0;  // N'
  uint32_t c_prime = 0;      // inner protocol length is at most c_prime * beta
  ListDecodeGuarantee base;  // block_rounds: rounds per meta-round
  uint32_t s_out = 0;
  uint64_t vote_floor = 0;   // ceil(N' eps' / 4)
  MetaLayout layout;

  // base.block_rounds is set to R * c_prime * beta.
  static BoostConfig make(uint32_t n, Rate eps_prime, Rate rho, uint32_t s, double p, uint32_t C = 3,
                          bool pad_layout = false);
  uint64_t total_rounds() const { return meta_rounds * base.block_rounds; }
  Rate guaranteed_rate() const { return base.rho - eps_prime; }
  // Throws std::invalid_argument naming the violated condition.
  void validate() const;
};

// Cursors of one party at nodes of its own edge set, built by descending
// from the nearest cached ancestor and cached in turn.
class CursorCache {
 public:
  CursorCache(const PartyInput& input, const IncrementalSubtree& tree);
  const PartyCursor& at(int32_t node);
  void put(int32_t node, std::unique_ptr<PartyCursor> c) { cache_[node] = std::move(c); }
  uint64_t steps() const { return steps_; }

 private:
  const IncrementalSubtree* tree_;
  std::unordered_map<int32_t, std::unique_ptr<PartyCursor>> cache_;
  uint64_t steps_ = 0;
};

using VoteTable = std::map<Bits, uint64_t>;

// Leaves ranked by votes, ties broken lexicographically.
std::vector<Bits> top_leaves(const VoteTable& votes, size_t k);
uint64_t total_votes(const VoteTable& votes);

enum class SearchMode { Simple, Double };
SearchMode parse_search_mode(const std::string& name);
std::string search_mode_name(SearchMode m);

// A decoded inner transcript as the receiver reads it: the search ended at
// |node| of its own edge set and the extension phase produced |block|.
struct Candidate {
  int32_t node = IncrementalSubtree::kNone;
  Bits block;
};

struct MetaContext {
  uint64_t index = 0;
  uint64_t seed = 0;         // per-meta-round randomness
  uint64_t search_seed = 0;  // Alice's seed, seed_bits wide
  const BoostConfig* config = nullptr;
  const IncrementalSubtree* tree[2] = {nullptr, nullptr};
  const PartyInput* input[2] = {nullptr, nullptr};
  const Bits* common = nullptr;  // root-to-leaf common path
  // The noiseless outcome: each party's search endpoint plus the block.
  int32_t search_node[2] = {IncrementalSubtree::kRoot, IncrementalSubtree::kRoot};
  Bits true_block;
  std::function<std::unique_ptr<PartyCursor>(Party, int32_t)> cursor_at;
};

struct MetaOutcome {
  std::vector<Candidate> candidates[2];
  uint64_t rounds = 0;
  uint64_t corruptions = 0;
  bool within = false;         // measured rate within the base guarantee
  bool truth_offered[2] = {false, false};
};

class MetaBase {
 public:
  virtual ~MetaBase() = default;
  virtual ListDecodeGuarantee guarantee() const = 0;
  virtual MetaOutcome run(const MetaContext& ctx, std::mt19937_64& rng) = 0;
  virtual std::string name() const = 0;
};

// Stands in for a list decoder of the inner protocol: the rounds are
// charged to the shared session and the noiseless outcome is offered iff
// the measured rate is admissible and the p-coin passes.
class OracleMetaBase final : public MetaBase {
 public:
  OracleMetaBase(ListDecodeGuarantee g, GarbagePolicy policy, Session& session);
  ListDecodeGuarantee guarantee() const override { return g_; }
  MetaOutcome run(const MetaContext& ctx, std::mt19937_64& rng) override;
  std::string name() const override { return "oracle"; }

 private:
  Candidate garbage(const MetaContext& ctx, Party receiver, std::mt19937_64& rng) const;

  ListDecodeGuarantee g_;
  GarbagePolicy policy_;
  Session* session_;
};

struct BoostOptions {
  SearchMode search = SearchMode::Simple;
  bool keep_log = false;
  bool audit = true;  // brute-force intersection checks every meta-round
  bool keep_trees = false;
};

struct MetaRoundLog {
  uint64_t index = 0;
  uint64_t rounds = 0;
  uint64_t corruptions = 0;
  bool within = false;
  bool truth_offered[2] = {false, false};
  uint32_t common_before = 0;
  uint32_t common_after = 0;
  uint32_t search_depth = 0;
  bool voted_truth[2] = {false, false};
  uint32_t accepted[2] = {0, 0};
  uint32_t rejected[2] = {0, 0};
  uint64_t edges[2] = {0, 0};
};

struct BoostResult {
  BoostConfig config;
  Bits truth;
  VoteTable votes[2];
  std::vector<Bits> output[2];
  bool correct[2] = {false, false};
  uint64_t truth_votes[2] = {0, 0};
  uint64_t spent = 0;  // corruptions charged during this run
  uint64_t rounds = 0;
  uint64_t within_meta_rounds = 0;
  uint64_t base_failures = 0;          // within the guarantee, truth not offered
  uint64_t dichotomy_violations = 0;   // within, offered, yet neither progress nor votes
  uint64_t prefix_violations = 0;      // intersection left the common path
  uint64_t vote_bound_violations = 0;
  uint64_t search_mismatches = 0;      // protocol output differs from the brute-force intersection
  uint64_t accepted_blocks[2] = {0, 0};
  uint64_t rejected_blocks[2] = {0, 0};
  uint64_t cursor_steps = 0;
  IntersectStats search;
  std::vector<MetaRoundLog> log;
  std::shared_ptr<const IncrementalSubtree> trees[2];  // final edge sets, when kept

  bool both_correct() const { return correct[0] && correct[1]; }
  std::string meta_csv() const;
  std::string ranking_csv(size_t k) const;
};

BoostResult run_boost(const PartyInput& alice, const PartyInput& bob, const BoostConfig& config, MetaBase& base,
                      uint64_t seed, const BoostOptions& options = {});

struct BoostRun {
  BoostResult result;
  uint64_t limit = 0;
  uint64_t spent = 0;
  bool budget_ok() const { return spent <= limit; }
};

// One boosting level over an oracle base, the whole run charged to a
// session of config.total_rounds() rounds at |rate|.
BoostRun run_boost_oracle(const ProtocolInstance& instance, const BoostConfig& config, GarbagePolicy policy,
                          Adversary& adversary, Rate rate, uint64_t seed, const BoostOptions& options = {});

}  // namespace icoding
