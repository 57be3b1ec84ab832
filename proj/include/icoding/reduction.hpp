#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "icoding/base_decoders.hpp"
#include "icoding/channel.hpp"
#include "icoding/ecc.hpp"
#include "icoding/tree.hpp"

namespace icoding {

enum class Variant { NonAdaptive14, Adaptive27, OneSided13, ListReduce };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct ReductionConfig {
  Variant variant = Variant::NonAdaptive14;
  Rate eps{1, 10};
  uint32_t n = 0;        // protocol depth
  uint32_t s = 1;        // inner list size
  uint32_t b1 = 0;       // joint blocks
  uint32_t b2 = 0;       // exclusive blocks
  uint32_t n_c = 0;      // ECC codeword length = N'/2
  uint64_t block_rounds = 0;  // N'
  uint64_t total_rounds = 0;  // N''
  size_t edge_bound = 0;      // b1 * s * n edges
  uint32_t list_L = 0;        // list-decoding width (list reduction only)

  static ReductionConfig make(Variant v, Rate eps, uint32_t n, uint32_t s);
  // Error rate the variant is proven to tolerate.
  Rate guaranteed_rate() const;
  // Error rate the inner list decoder must tolerate.
  Rate inner_rate() const;
  // The E-set code: interleaved RS with k = 2 over N_c positions.
  InterleavedRs make_code() const;
  // units / N_c > 1/eps
  bool above_threshold(int64_t units) const;
  // units / N_c >= k / eps
  bool at_least_multiple(int64_t units, int64_t k) const;
};

// Integer confidence in units of 1/N_c: N_c - 2 * distance.
inline int64_t confidence_units(uint32_t distance, uint32_t n_c) {
  return static_cast<int64_t>(n_c) - 2 * static_cast<int64_t>(distance);
}

struct BlockRecord {
  bool decoded = false;
  uint32_t distance = 0;
  int64_t c_units = 0;
  Bits path;  // empty denotes the empty path
};

class ConfidenceLedger {
 public:
  explicit ConfidenceLedger(uint32_t unit = 1) : unit_(unit) {}

  void add(BlockRecord r) { blocks_.push_back(std::move(r)); }
  const std::vector<BlockRecord>& blocks() const { return blocks_; }
  uint32_t unit() const { return unit_; }

  int64_t total() const;
  int64_t of(const Bits& path) const;
  int64_t of_empty() const { return of(Bits{}); }
  // Non-empty path with the largest summed confidence (lexicographic ties).
  std::optional<Bits> tau_max() const;
  // c(tau_max) - (C - c(tau_max) - c(empty))
  int64_t c_prime() const;
  // 2 (c(tau_max) + c(empty)) - C
  int64_t c_double_prime() const;

 private:
  uint32_t unit_;
  std::vector<BlockRecord> blocks_;
};

struct BlockConfidence {
  std::optional<SubtreeEdgeSet> edges;  // nullopt: invalid or undecodable
  bool decoded = false;
  uint32_t distance = 0;
  int64_t c_units = 0;
};

BlockConfidence block_confidence(const std::vector<uint64_t>& word, const InterleavedRs& code, size_t edge_bound,
                                 uint32_t n);

// Own preferred edges at own depths, the unique edge of |edges| elsewhere;
// empty unless the walk reaches depth n.
Bits derive_path(const SubtreeEdgeSet* edges, const PartyInput& own);

// True iff every edge of |set| at a depth owned by |input|'s party is preferred.
bool respects_own_preferences(const SubtreeEdgeSet& set, const PartyInput& input);

struct ReductionResult {
  ReductionConfig config;
  Bits truth;
  Bits output[2];
  bool correct[2] = {false, false};
  ConfidenceLedger ledger[2];
  int64_t c_prime[2] = {0, 0};          // final
  int64_t c_double_prime[2] = {0, 0};   // after the joint part
  bool safe[2] = {false, false};
  std::vector<Bits> lists[2];           // list reduction output
  uint64_t spent = 0;
  uint64_t limit = 0;
  uint64_t rounds = 0;
  uint64_t guarantee_void_blocks = 0;   // joint blocks above the inner rate
  bool esets_respect_preferences = true;
  size_t eset_size[2] = {0, 0};
  ExecutionTrace trace;

  bool budget_ok() const { return spent <= limit; }
  double conf(int64_t units) const { return static_cast<double>(units) / config.n_c; }
};

ReductionResult run_reduction(const ReductionConfig& config, const ProtocolInstance& instance,
                              const InnerScheme& inner, Adversary& adversary, Rate rate, uint64_t seed,
                              TraceLevel level = TraceLevel::None);

// Round layout of a reduction execution.
struct RoundSlot {
  bool exclusive = false;
  uint32_t block = 0;  // index within its part
  uint32_t slot = 0;   // ECC position carried by this round
  Party joint_sender = Party::Alice;
  uint64_t block_start = 0;
};
RoundSlot layout(const ReductionConfig& config, uint64_t round);

// Pushes the receiver toward the E-set codeword of a wrong path, spending
// N_c - radius corruptions per attacked block until the budget is gone.
class AntiMajorityAdversary final : public Adversary {
 public:
  enum class Target { Alice, Bob, Both };

  AntiMajorityAdversary(const ReductionConfig& config, const ProtocolInstance& instance, Target target,
                        uint64_t seed);
  void decide(const RoundView& view, AdversaryMove& move) override;
  std::string name() const override { return "antimajority"; }
  const Bits& fake_path(Party receiver) const { return fake_[index_of(receiver)]; }

 private:
  ReductionConfig config_;
  InterleavedRs code_;
  Target target_;
  std::mt19937_64 rng_;
  Bits fake_[2];
  std::vector<uint64_t> fake_word_[2];
  uint64_t active_block_start_ = UINT64_MAX;
  bool committed_[2] = {false, false};
  uint32_t agree_[2] = {0, 0};
  uint32_t needed_ = 0;

  bool targets(Party receiver) const;
};

AntiMajorityAdversary::Target parse_target(const std::string& s);

}  // namespace icoding
