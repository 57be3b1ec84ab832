#include "icoding/base_decoders.hpp"

#include <algorithm>

namespace icoding {

void ListDecodeGuarantee::validate() const {
  if (!(Rate(0, 1) < rho) || !(rho < Rate(1, 2))) throw std::invalid_argument("tolerable rate must lie in (0, 1/2)");
  if (s == 0) throw std::invalid_argument("list size must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("failure probability must lie in [0, 1]");
  if (block_rounds == 0 || block_rounds % 2 != 0) throw std::invalid_argument("balanced blocks need an even length");
}

GarbagePolicy parse_policy(const std::string& name) {
  if (name == "duplicate") return GarbagePolicy::Duplicate;
  if (name == "random") return GarbagePolicy::Random;
  if (name == "hostile") return GarbagePolicy::Hostile;
  throw std::invalid_argument("unknown garbage policy: " + name);
}

std::string policy_name(GarbagePolicy p) {
  switch (p) {
    case GarbagePolicy::Duplicate: return "duplicate";
    case GarbagePolicy::Random: return "random";
    case GarbagePolicy::Hostile: return "hostile";
  }
  return "?";
}

OracleBlock::OracleBlock(ListDecodeGuarantee g, GarbagePolicy policy) : g_(g), policy_(policy) {
  if (g_.s == 0) throw std::invalid_argument("list size must be positive");
  if (!(g_.p >= 0.0 && g_.p <= 1.0)) throw std::invalid_argument("failure probability must lie in [0, 1]");
}

bool OracleBlock::truth_included(uint64_t corruptions, uint64_t rounds, std::mt19937_64& rng) const {
  if (!within(corruptions, rounds)) return false;
  if (g_.p > 0.0 && std::bernoulli_distribution(g_.p)(rng)) return false;
  return true;
}

Bits OracleBlock::garbage_path(const Bits& truth, const PartyInput& receiver, const PartyInput& sender,
                               std::mt19937_64& rng) const {
  const uint32_t n = receiver.depth();
  Bits path(n);
  if (policy_ == GarbagePolicy::Random || (policy_ == GarbagePolicy::Duplicate && truth.empty())) {
    for (auto& b : path) b = static_cast<uint8_t>(rng() & 1u);
    return path;
  }
  if (policy_ == GarbagePolicy::Duplicate) return truth;
  // Hostile: agree with the truth down to a random sender-owned depth, leave
  // it there, and keep avoiding the sender's preferred edges below while
  // honouring every receiver preference.
  const uint32_t first = index_of(sender.party());
  const uint32_t choices = (n - first + 1) / 2;
  const uint32_t split = first + 2 * static_cast<uint32_t>(rng() % choices);
  auto rc = receiver.root();
  auto sc = sender.root();
  for (uint32_t d = 0; d < n; ++d) {
    uint8_t b;
    if (owner_of_depth(d) == receiver.party()) b = rc->preferred();
    else if (d < split) b = truth.empty() ? sc->preferred() : truth[d];
    else b = static_cast<uint8_t>(sc->preferred() ^ 1u);
    path[d] = b;
    rc->descend(b);
    sc->descend(b);
  }
  return path;
}

std::vector<Bits> OracleBlock::decode(uint64_t corruptions, const Bits& truth, const PartyInput& receiver,
                                      const PartyInput& sender, std::mt19937_64& rng) const {
  std::vector<Bits> out;
  out.reserve(g_.s);
  const bool keep = truth_included(corruptions, g_.block_rounds, rng);
  if (keep) out.push_back(truth);
  while (out.size() < g_.s) out.push_back(garbage_path(keep ? truth : Bits{}, receiver, sender, rng));
  if (keep && policy_ != GarbagePolicy::Duplicate) std::shuffle(out.begin(), out.end(), rng);
  return out;
}

OracleScheme::OracleScheme(const ProtocolInstance& instance, ListDecodeGuarantee g, GarbagePolicy policy)
    : instance_(&instance), truth_(common_path(instance)), oracle_(g, policy) {
  g.validate();
  party_[0] = instance.party(Party::Alice);
  party_[1] = instance.party(Party::Bob);
}

void OracleScheme::fill(Party sender, uint32_t slot, std::vector<uint64_t>& inner) const {
  // The oracle's own transmissions are opaque; a tag makes substitutions
  // observable in traces.
  inner.assign(1, mix2(static_cast<uint64_t>(sender) + 1, slot));
}

std::vector<Bits> OracleScheme::decode(Party receiver, const std::vector<const Symbol*>&, uint64_t block_corruptions,
                                       std::mt19937_64& rng) const {
  return oracle_.decode(block_corruptions, truth_, *party_[index_of(receiver)], *party_[index_of(other(receiver))],
                        rng);
}

uint32_t ecc_length_for(Rate eps) {
  if (!(Rate(0, 1) < eps) || !(eps < Rate(1, 1))) throw std::invalid_argument("eps must lie in (0, 1)");
  // 2 * ceil(1/eps)
  int64_t inv = (eps.den + eps.num - 1) / eps.num;
  return static_cast<uint32_t>(std::max<int64_t>(4, 2 * inv));
}

RsExchangeBlock::RsExchangeBlock(const ProtocolInstance& instance, Rate eps)
    : instance_(&instance), eps_(eps), code_n_c_(ecc_length_for(eps)) {
  if (instance.depth() > kMaxDepth) throw std::invalid_argument("RS exchange supports at most 16 rounds");
  for (int i = 0; i < 2; ++i) {
    table_[i] = instance.table(static_cast<Party>(i));
    uint32_t m = InterleavedRs::components_for(table_[i].size(), 2);
    code_[i] = std::make_unique<InterleavedRs>(2, code_n_c_, m, 0x7AB1E0ull + i);
    codeword_[i] = code_[i]->encode_bits(table_[i]);
  }
}

ListDecodeGuarantee RsExchangeBlock::guarantee() const {
  ListDecodeGuarantee g;
  g.rho = Rate(1, 4) - eps_;
  g.s = 1;
  g.p = 0.0;
  g.block_rounds = block_rounds();
  return g;
}

void RsExchangeBlock::fill(Party sender, uint32_t slot, std::vector<uint64_t>& inner) const {
  const int i = index_of(sender);
  const uint32_t m = code_[i]->m();
  inner.assign(codeword_[i].begin() + static_cast<ptrdiff_t>(slot) * m,
               codeword_[i].begin() + static_cast<ptrdiff_t>(slot + 1) * m);
}

Bits RsExchangeBlock::decode_path(Party receiver, const std::vector<const Symbol*>& received) const {
  const int o = index_of(other(receiver));
  const InterleavedRs& code = *code_[o];
  const uint32_t m = code.m();
  std::vector<uint64_t> word(static_cast<size_t>(code.n_c()) * m, ~uint64_t{0});
  for (uint32_t j = 0; j < code.n_c() && j < received.size(); ++j) {
    const Symbol* s = received[j];
    if (!s || s->inner.size() != m) continue;
    std::copy(s->inner.begin(), s->inner.end(), word.begin() + static_cast<ptrdiff_t>(j) * m);
  }
  auto dec = code.unique_decode(word);
  if (!dec) return {};
  Bits other_table = code.message_bits(dec->message);
  other_table.resize(table_[o].size());
  Bits tables[2];
  tables[index_of(receiver)] = table_[index_of(receiver)];
  tables[o] = std::move(other_table);
  auto inst = ProtocolInstance::from_tables(instance_->depth(), tables[0], tables[1]);
  return common_path(inst);
}

std::vector<Bits> RsExchangeBlock::decode(Party receiver, const std::vector<const Symbol*>& received, uint64_t,
                                          std::mt19937_64&) const {
  return {decode_path(receiver, received)};
}

}  // namespace icoding
