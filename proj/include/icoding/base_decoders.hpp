#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "icoding/channel.hpp"
#include "icoding/ecc.hpp"
#include "icoding/tree.hpp"

namespace icoding {

struct ListDecodeGuarantee {
  Rate rho;                   // tolerable block error fraction
  uint32_t s = 1;             // list size
  double p = 0.0;             // failure probability inside the guarantee
  uint64_t block_rounds = 0;  // N', each party sends N'/2

  void validate() const;
};

enum class GarbagePolicy {
  Duplicate,  // pad with copies of the truth (random paths when it is absent)
  Random,     // uniformly random root-to-leaf paths
  Hostile     // consistent with the receiver, wrong at the other party's levels
};

GarbagePolicy parse_policy(const std::string& name);
std::string policy_name(GarbagePolicy p);

// A block-level coding scheme as seen by the reductions: N' rounds with the
// senders alternating (Alice first), each transmission carrying an inner
// component, and a list of candidate paths per receiver at the end.
class InnerScheme {
 public:
  virtual ~InnerScheme() = default;
  virtual uint64_t block_rounds() const = 0;
  virtual ListDecodeGuarantee guarantee() const = 0;
  virtual void fill(Party sender, uint32_t slot, std::vector<uint64_t>& inner) const = 0;
  // received[j] is the j-th transmission of the other party (null if lost).
  virtual std::vector<Bits> decode(Party receiver, const std::vector<const Symbol*>& received,
                                   uint64_t block_corruptions, std::mt19937_64& rng) const = 0;
  virtual std::string name() const = 0;
};

// Realises the list-decoding hypothesis directly: the block's measured error
// fraction decides whether the truth is in the list.
class OracleBlock {
 public:
  OracleBlock(ListDecodeGuarantee g, GarbagePolicy policy);

  const ListDecodeGuarantee& guarantee() const { return g_; }
  GarbagePolicy policy() const { return policy_; }
  bool within(uint64_t corruptions, uint64_t rounds) const { return g_.rho.admits(corruptions, rounds); }
  // Guarantee holds and the p-coin did not fail.
  bool truth_included(uint64_t corruptions, uint64_t rounds, std::mt19937_64& rng) const;

  // Exactly s candidate root-to-leaf paths for |receiver|.
  std::vector<Bits> decode(uint64_t corruptions, const Bits& truth, const PartyInput& receiver,
                           const PartyInput& sender, std::mt19937_64& rng) const;

  Bits garbage_path(const Bits& truth, const PartyInput& receiver, const PartyInput& sender,
                    std::mt19937_64& rng) const;

 private:
  ListDecodeGuarantee g_;
  GarbagePolicy policy_;
};

class OracleScheme final : public InnerScheme {
 public:
  OracleScheme(const ProtocolInstance& instance, ListDecodeGuarantee g, GarbagePolicy policy);
  uint64_t block_rounds() const override { return oracle_.guarantee().block_rounds; }
  ListDecodeGuarantee guarantee() const override { return oracle_.guarantee(); }
  void fill(Party sender, uint32_t slot, std::vector<uint64_t>& inner) const override;
  std::vector<Bits> decode(Party receiver, const std::vector<const Symbol*>& received, uint64_t block_corruptions,
                           std::mt19937_64& rng) const override;
  std::string name() const override { return "oracle"; }
  const OracleBlock& oracle() const { return oracle_; }

 private:
  const ProtocolInstance* instance_;
  Bits truth_;
  OracleBlock oracle_;
  std::unique_ptr<PartyInput> party_[2];
};

// Each party Reed-Solomon encodes its whole preferred-edge table and sends it
// over its N'/2 slots; the receiver unique-decodes the other table and
// reads off the common path. Tolerates block error rate 1/4 - eps.
class RsExchangeBlock final : public InnerScheme {
 public:
  static constexpr uint32_t kMaxDepth = 16;

  RsExchangeBlock(const ProtocolInstance& instance, Rate eps);
  uint64_t block_rounds() const override { return 2ull * code_n_c_; }
  ListDecodeGuarantee guarantee() const override;
  void fill(Party sender, uint32_t slot, std::vector<uint64_t>& inner) const override;
  std::vector<Bits> decode(Party receiver, const std::vector<const Symbol*>& received, uint64_t block_corruptions,
                           std::mt19937_64& rng) const override;
  std::string name() const override { return "rs_exchange"; }

  // Decoded path, or an empty path on decode failure.
  Bits decode_path(Party receiver, const std::vector<const Symbol*>& received) const;

 private:
  const ProtocolInstance* instance_;
  Rate eps_;
  uint32_t code_n_c_;
  Bits table_[2];
  std::unique_ptr<InterleavedRs> code_[2];
  std::vector<uint64_t> codeword_[2];
};

// ECC codeword length used at a given eps: 2 * ceil(1/eps) positions carry
// a k = 2 code of relative distance 1 - eps/2.
uint32_t ecc_length_for(Rate eps);

}  // namespace icoding
